#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "daqa/common/rng.hpp"
#include "daqa/nn/optim.hpp"
#include "daqa/questions/catalog.hpp"
#include "daqa/questions/engine.hpp"

namespace daqa::eval {

using questions::AnswerVocab;
using questions::Catalog;
using questions::QuestionInstance;

/// Answer label indices of `questions` under `vocab`.
std::vector<int> gold_labels(const std::vector<QuestionInstance>& questions, const AnswerVocab& vocab);

enum class BaselineKind { Random, Mode, RandomPerTemplate, ModePerTemplate };

std::string to_string(BaselineKind k);
BaselineKind baseline_kind_from_string(const std::string& s);
inline constexpr BaselineKind kAllBaselines[] = {BaselineKind::Random, BaselineKind::Mode,
                                                 BaselineKind::RandomPerTemplate, BaselineKind::ModePerTemplate};

/// Most frequent label; ties go to the lowest index. -1 for an empty histogram.
int mode_of(const std::vector<std::size_t>& histogram);

class Baseline {
 public:
  static Baseline fit(BaselineKind kind, const std::vector<QuestionInstance>& train, const Catalog& catalog,
                      const AnswerVocab& vocab, std::uint64_t seed);

  BaselineKind kind() const { return kind_; }
  int global_mode() const { return global_mode_; }
  /// Random variants draw from the baseline's own seeded stream.
  int predict(const QuestionInstance& q);
  std::vector<int> predict_all(const std::vector<QuestionInstance>& questions);

 private:
  BaselineKind kind_ = BaselineKind::Mode;
  std::size_t classes_ = 0;
  int global_mode_ = 0;
  std::map<std::string, int> template_mode_;
  std::map<std::string, std::vector<int>> template_support_;
  Rng rng_;
};

enum class LogisticFeatures { TemplateOneHot, BagOfWords };

std::string to_string(LogisticFeatures f);

struct LogisticConfig {
  nn::AdamConfig adam;
  int batch_size = 40;
  int max_epochs = 3000;
  double tolerance = 1e-5;  // stop when the loss moved less than this over `patience` epochs
  int patience = 5;
  /// Classes scoring within this many nats of the best are tied; ties go to
  /// the lowest index, as in mode_of.
  double tie_tolerance = 1e-2;
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression on sparse question features. Weights
/// start at zero; the template one-hot model has no bias term (the one-hot
/// already spans it), so answers tied within a template stay exactly tied.
class LogisticModel {
 public:
  static LogisticModel fit(LogisticFeatures features, const std::vector<QuestionInstance>& train,
                           const AnswerVocab& vocab, const LogisticConfig& config);

  int predict(const QuestionInstance& q) const;
  /// Raw class scores (logits).
  std::vector<double> scores(const QuestionInstance& q) const;
  std::vector<int> predict_all(const std::vector<QuestionInstance>& questions) const;
  int epochs_run() const { return epochs_; }
  double final_loss() const { return loss_; }

 private:
  using Sparse = std::vector<std::pair<int, float>>;
  Sparse encode(const QuestionInstance& q) const;
  void logits(const Sparse& x, std::vector<double>& out) const;

  LogisticFeatures features_ = LogisticFeatures::TemplateOneHot;
  std::map<std::string, int> index_;
  int dims_ = 0;
  int classes_ = 0;
  bool bias_ = true;
  std::vector<float> w_;  // [classes x dims]
  std::vector<float> b_;
  double tie_tolerance_ = 0.0;
  int epochs_ = 0;
  double loss_ = 0.0;
};

}  // namespace daqa::eval
