#include "daqa/models/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "daqa/common/error.hpp"
#include "daqa/nn/checkpoint.hpp"

namespace daqa::models {

Json to_json(const EpochLog& e) {
  Json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_acc", e.train_acc}, {"seconds", e.seconds}};
  if (e.train_eval_acc >= 0) j["train_eval_acc"] = e.train_eval_acc;
  if (e.val_acc >= 0) j["val_acc"] = e.val_acc;
  return j;
}

std::vector<std::vector<std::size_t>> make_batches(const QaDataset& data, int batch_size, Rng& rng) {
  if (batch_size < 2) throw SchemaError("batch_size must be >= 2");
  std::vector<std::size_t> order(data.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.frames[data.examples[a].clip] < data.frames[data.examples[b].clip];
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  shuffle(batches, rng);
  return batches;
}

ModelInput<float> batch_input(const QaDataset& data, const std::vector<std::size_t>& batch, int min_width) {
  std::vector<const std::vector<float>*> feats;
  std::vector<int> frames;
  std::vector<std::vector<int>> questions;
  for (std::size_t i : batch) {
    const auto& ex = data.examples.at(i);
    feats.push_back(&data.features.at(ex.clip));
    frames.push_back(data.frames.at(ex.clip));
    questions.push_back(ex.tokens);
  }
  return make_input<float>(feats, frames, data.n_mels, questions, min_width);
}

namespace {

int argmax_row(const nn::Tensor<float>& logits, int n) {
  const int K = logits.dim(1);
  const float* row = logits.data() + static_cast<std::size_t>(n) * K;
  return static_cast<int>(std::max_element(row, row + K) - row);
}

std::vector<int> labels_of(const QaDataset& data, const std::vector<std::size_t>& batch) {
  std::vector<int> y;
  for (std::size_t i : batch) y.push_back(data.examples[i].label);
  return y;
}

std::vector<nn::Tensor<float>> snapshot(const nn::ParamSet<float>& ps) {
  std::vector<nn::Tensor<float>> s;
  for (const auto& p : ps.params()) s.push_back(p.second->value);
  for (const auto& b : ps.buffers()) s.push_back(*b.second);
  return s;
}

void restore(nn::ParamSet<float>& ps, const std::vector<nn::Tensor<float>>& s) {
  std::size_t k = 0;
  for (const auto& p : ps.params()) p.second->value = s[k++];
  for (auto& b : ps.buffers()) *b.second = s[k++];
}

}  // namespace

std::vector<int> predict(const Model<float>& model, const QaDataset& data, int batch_size) {
  std::vector<int> out(data.examples.size());
  std::vector<std::size_t> order(data.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.frames[data.examples[a].clip] < data.frames[data.examples[b].clip];
  });
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(i),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + static_cast<std::size_t>(batch_size))));
    const auto res = model.forward(batch_input(data, batch, model.min_frames()), {});
    for (std::size_t k = 0; k < batch.size(); ++k) out[batch[k]] = argmax_row(res.logits->value, static_cast<int>(k));
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const QaDataset& data) {
  if (predicted.size() != data.examples.size()) throw ShapeError("accuracy: prediction count does not match dataset");
  if (predicted.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hit += predicted[i] == data.examples[i].label;
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

TrainResult train(Model<float>& model, const QaDataset& train_set, const QaDataset* val_set, const TrainConfig& cfg) {
  if (train_set.examples.size() < 2) throw SchemaError("training needs at least 2 examples");
  Rng rng(derive_seed(cfg.seed, "train"));
  nn::Adam<float> adam(model.params(), cfg.adam);
  std::ofstream log;
  if (!cfg.log.empty()) {
    if (cfg.log.has_parent_path()) std::filesystem::create_directories(cfg.log.parent_path());
    log.open(cfg.log, std::ios::trunc);
    if (!log) throw LoadError("cannot write training log " + cfg.log.string());
  }

  TrainResult result;
  std::vector<nn::Tensor<float>> best;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog e;
    e.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t hits = 0, seen = 0;
    const auto batches = make_batches(train_set, cfg.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      const auto labels = labels_of(train_set, batch);
      auto res = model.forward(batch_input(train_set, batch, model.min_frames()), {.training = true});
      auto loss = nn::softmax_cross_entropy(res.logits, labels);
      const float lv = loss->value[0];
      if (!std::isfinite(lv)) {
        const std::string op = nn::first_non_finite(loss);
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                           (op.empty() ? "" : " (first bad op: " + op + ")"));
      }
      model.params().zero_grad();
      nn::backward(loss);
      adam.step();
      loss_sum += static_cast<double>(lv) * batch.size();
      seen += batch.size();
      for (std::size_t k = 0; k < batch.size(); ++k) hits += argmax_row(res.logits->value, static_cast<int>(k)) == labels[k];
    }
    model.params().zero_grad();
    e.train_loss = loss_sum / static_cast<double>(seen);
    e.train_acc = static_cast<double>(hits) / static_cast<double>(seen);
    if (cfg.eval_train) e.train_eval_acc = accuracy(predict(model, train_set, cfg.batch_size), train_set);
    if (val_set && !val_set->examples.empty()) e.val_acc = accuracy(predict(model, *val_set, cfg.batch_size), *val_set);
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double score = val_set ? e.val_acc : e.train_acc;
    if (result.best_epoch < 0 || score > result.best_val_acc || !val_set) {
      result.best_epoch = epoch;
      result.best_val_acc = score;
      best = snapshot(model.params());
    }
    result.epochs.push_back(e);
    if (log) log << to_json(e).dump() << '\n' << std::flush;
    if (cfg.eval_train && e.train_eval_acc >= cfg.stop_at_train_acc) break;
  }
  if (!best.empty()) restore(model.params(), best);
  if (!val_set) result.best_val_acc = -1.0;
  if (!cfg.checkpoint.empty())
    nn::save_checkpoint(cfg.checkpoint, model.params(),
                        {{"model", to_json(model.config())}, {"best_epoch", result.best_epoch}, {"best_val_acc", result.best_val_acc}});
  return result;
}

}  // namespace daqa::models
