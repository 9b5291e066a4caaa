#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "daqa/clips/composer.hpp"
#include "daqa/common/error.hpp"
#include "daqa/models/trainer.hpp"
#include "daqa/models/vocab.hpp"
#include "daqa/pipeline/config.hpp"
#include "daqa/questions/answer.hpp"

namespace daqa::pipeline {

/// A stage ran before the outputs it depends on exist.
class StageError : public Error {
 public:
  using Error::Error;
};

/// File layout under the output root.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path library() const { return root / "events" / "library.json"; }
  std::filesystem::path clips_dir() const { return root / "clips"; }
  std::filesystem::path annotations(clips::SplitName s) const;
  std::filesystem::path audio_dir(clips::SplitName s) const;
  std::filesystem::path questions(clips::SplitName s) const;
  std::filesystem::path generation_report(clips::SplitName s) const;
  std::filesystem::path features_dir(clips::SplitName s) const;
  std::filesystem::path norm_stats() const { return root / "features" / "norm_stats.json"; }
  std::filesystem::path model_dir() const { return root / "model"; }
  std::filesystem::path checkpoint() const { return model_dir() / "checkpoint.bin"; }
  std::filesystem::path vocabulary() const { return model_dir() / "vocab.json"; }
  std::filesystem::path eval_dir() const { return root / "eval"; }
  std::filesystem::path stats_dir() const { return root / "stats"; }
  std::filesystem::path verify_report() const { return root / "verify" / "report.json"; }
  std::filesystem::path saliency_dir() const { return root / "saliency"; }
};

clips::SplitName split_from_string(const std::string& s);

/// Stage names in pipeline order.
const std::vector<std::string>& stage_names();

struct VerifyResult {
  bool ok = true;
  Json report;
};

void gen_events(const RunConfig& c, std::ostream& log);
void gen_clips(const RunConfig& c, std::ostream& log);
void gen_questions(const RunConfig& c, std::ostream& log);
VerifyResult verify(const RunConfig& c, std::ostream& log);
void stats(const RunConfig& c, std::ostream& log);
void extract_features(const RunConfig& c, std::ostream& log);
models::TrainResult train_model(const RunConfig& c, std::ostream& log);
Json evaluate_all(const RunConfig& c, std::ostream& log);
void saliency_maps(const RunConfig& c, std::ostream& log);

/// Runs one named stage; returns 0 on success and 1 when verify finds a
/// violation. Errors propagate as exceptions.
int run_stage(const std::string& name, const RunConfig& c, std::ostream& log);

/// Encoded question/feature dataset for one split.
models::QaDataset load_qa_dataset(const RunConfig& c, clips::SplitName split, const models::Vocabulary& vocab,
                                  const questions::AnswerVocab& answers);

}  // namespace daqa::pipeline
