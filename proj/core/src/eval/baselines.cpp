#include "daqa/eval/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>

#include "daqa/common/error.hpp"

namespace daqa::eval {

std::vector<int> gold_labels(const std::vector<QuestionInstance>& questions, const AnswerVocab& vocab) {
  std::vector<int> y;
  y.reserve(questions.size());
  for (const auto& q : questions) y.push_back(static_cast<int>(vocab.require(q.answer)));
  return y;
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Random: return "random";
    case BaselineKind::Mode: return "mode";
    case BaselineKind::RandomPerTemplate: return "random_per_template";
    case BaselineKind::ModePerTemplate: return "mode_per_template";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& s) {
  for (auto k : kAllBaselines)
    if (to_string(k) == s) return k;
  throw SchemaError("unknown baseline '" + s + "'");
}

int mode_of(const std::vector<std::size_t>& histogram) {
  int best = -1;
  for (std::size_t i = 0; i < histogram.size(); ++i)
    if (histogram[i] > 0 && (best < 0 || histogram[i] > histogram[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
  return best;
}

Baseline Baseline::fit(BaselineKind kind, const std::vector<QuestionInstance>& train, const Catalog& catalog,
                       const AnswerVocab& vocab, std::uint64_t seed) {
  Baseline b;
  b.kind_ = kind;
  b.classes_ = vocab.size();
  b.rng_.seed(derive_seed(seed, "baseline:" + to_string(kind)));
  std::vector<std::size_t> global(vocab.size(), 0);
  std::map<std::string, std::vector<std::size_t>> per_template;
  for (const auto& q : train) {
    const auto y = vocab.require(q.answer);
    ++global[y];
    auto& h = per_template[q.template_id];
    h.resize(vocab.size(), 0);
    ++h[y];
  }
  b.global_mode_ = std::max(0, mode_of(global));
  for (const auto& [id, h] : per_template) b.template_mode_[id] = mode_of(h);
  for (const auto& t : catalog.templates()) {
    std::vector<int> s;
    for (const auto& label : t.support) s.push_back(static_cast<int>(vocab.require(label)));
    b.template_support_[t.id] = std::move(s);
  }
  return b;
}

int Baseline::predict(const QuestionInstance& q) {
  switch (kind_) {
    case BaselineKind::Random: return static_cast<int>(uniform_index(rng_, classes_));
    case BaselineKind::Mode: return global_mode_;
    case BaselineKind::RandomPerTemplate: {
      auto it = template_support_.find(q.template_id);
      if (it == template_support_.end() || it->second.empty()) return static_cast<int>(uniform_index(rng_, classes_));
      return it->second[uniform_index(rng_, it->second.size())];
    }
    case BaselineKind::ModePerTemplate: {
      auto it = template_mode_.find(q.template_id);
      return it == template_mode_.end() ? global_mode_ : it->second;
    }
  }
  return global_mode_;
}

std::vector<int> Baseline::predict_all(const std::vector<QuestionInstance>& questions) {
  std::vector<int> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(predict(q));
  return out;
}

std::string to_string(LogisticFeatures f) { return f == LogisticFeatures::TemplateOneHot ? "template_onehot" : "bag_of_words"; }

LogisticModel::Sparse LogisticModel::encode(const QuestionInstance& q) const {
  Sparse x;
  if (features_ == LogisticFeatures::TemplateOneHot) {
    auto it = index_.find(q.template_id);
    if (it != index_.end()) x.emplace_back(it->second, 1.0f);
    return x;
  }
  std::map<int, float> counts;
  for (const auto& tok : q.tokens) {
    auto it = index_.find(tok);
    if (it != index_.end()) counts[it->second] += 1.0f;
  }
  return {counts.begin(), counts.end()};
}

void LogisticModel::logits(const Sparse& x, std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(classes_), 0.0);
  for (int k = 0; k < classes_; ++k) {
    double z = bias_ ? b_[static_cast<std::size_t>(k)] : 0.0f;
    for (const auto& [i, v] : x) z += static_cast<double>(w_[static_cast<std::size_t>(k) * dims_ + i]) * v;
    out[static_cast<std::size_t>(k)] = z;
  }
}

LogisticModel LogisticModel::fit(LogisticFeatures features, const std::vector<QuestionInstance>& train,
                                 const AnswerVocab& vocab, const LogisticConfig& cfg) {
  if (train.empty()) throw SchemaError("logistic baseline needs training questions");
  LogisticModel m;
  m.features_ = features;
  m.classes_ = static_cast<int>(vocab.size());
  m.bias_ = features == LogisticFeatures::BagOfWords;
  m.tie_tolerance_ = cfg.tie_tolerance;
  for (const auto& q : train) {
    if (features == LogisticFeatures::TemplateOneHot) {
      m.index_.emplace(q.template_id, 0);
    } else {
      for (const auto& t : q.tokens) m.index_.emplace(t, 0);
    }
  }
  for (auto& [k, v] : m.index_) v = m.dims_++;
  m.w_.assign(static_cast<std::size_t>(m.classes_) * m.dims_, 0.0f);
  m.b_.assign(static_cast<std::size_t>(m.classes_), 0.0f);

  std::vector<Sparse> xs;
  for (const auto& q : train) xs.push_back(m.encode(q));
  const auto ys = gold_labels(train, vocab);

  Rng rng(derive_seed(cfg.seed, "logistic:" + to_string(features)));
  nn::AdamMoments<float> sw, sb;
  std::vector<float> gw(m.w_.size()), gb(m.b_.size());
  std::vector<double> z;
  std::deque<double> history;
  std::int64_t step = 0;
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (m.epochs_ = 0; m.epochs_ < cfg.max_epochs;) {
    shuffle(order, rng);
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(cfg.batch_size));
      std::fill(gw.begin(), gw.end(), 0.0f);
      std::fill(gb.begin(), gb.end(), 0.0f);
      const float inv = 1.0f / static_cast<float>(e - s);
      for (std::size_t r = s; r < e; ++r) {
        const auto& x = xs[order[r]];
        m.logits(x, z);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (auto& v : z) sum += (v = std::exp(v - mx));
        for (int k = 0; k < m.classes_; ++k) {
          const float d = static_cast<float>(z[static_cast<std::size_t>(k)] / sum - (k == ys[order[r]] ? 1.0 : 0.0)) * inv;
          gb[static_cast<std::size_t>(k)] += d;
          for (const auto& [i, v] : x) gw[static_cast<std::size_t>(k) * m.dims_ + i] += d * v;
        }
      }
      ++step;
      nn::adam_update<float>(m.w_, gw, sw, step, cfg.adam);
      if (m.bias_) nn::adam_update<float>(m.b_, gb, sb, step, cfg.adam);
    }
    ++m.epochs_;

    double loss = 0.0;
    for (std::size_t r = 0; r < xs.size(); ++r) {
      m.logits(xs[r], z);
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - mx);
      loss += std::log(sum) + mx - z[static_cast<std::size_t>(ys[r])];
    }
    m.loss_ = loss / static_cast<double>(xs.size());
    history.push_back(m.loss_);
    if (static_cast<int>(history.size()) > cfg.patience) {
      if (std::abs(history.front() - history.back()) < cfg.tolerance) break;
      history.pop_front();
    }
  }
  return m;
}

std::vector<double> LogisticModel::scores(const QuestionInstance& q) const {
  std::vector<double> z;
  logits(encode(q), z);
  return z;
}

int LogisticModel::predict(const QuestionInstance& q) const {
  std::vector<double> z;
  logits(encode(q), z);
  const double best = *std::max_element(z.begin(), z.end());
  for (std::size_t k = 0; k < z.size(); ++k)
    if (z[k] >= best - tie_tolerance_) return static_cast<int>(k);
  return 0;
}

std::vector<int> LogisticModel::predict_all(const std::vector<QuestionInstance>& questions) const {
  std::vector<int> out;
  for (const auto& q : questions) out.push_back(predict(q));
  return out;
}

}  // namespace daqa::eval
