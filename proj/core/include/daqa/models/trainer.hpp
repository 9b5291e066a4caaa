#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "daqa/models/model.hpp"
#include "daqa/nn/optim.hpp"

namespace daqa::models {

struct QaExample {
  std::size_t clip = 0;
  std::vector<int> tokens;
  int label = 0;
};

/// Normalized features (row-major frames x n_mels per clip) plus encoded questions.
struct QaDataset {
  int n_mels = 64;
  std::vector<std::vector<float>> features;
  std::vector<int> frames;
  std::vector<QaExample> examples;
};

struct TrainConfig {
  nn::AdamConfig adam;
  int batch_size = 40;
  int epochs = 1;
  std::uint64_t seed = 0;
  /// Best-on-validation weights are written here when set.
  std::filesystem::path checkpoint;
  /// One JSON object per epoch when set.
  std::filesystem::path log;
  /// Also score the training set in eval mode after every epoch.
  bool eval_train = false;
  /// Stop once eval-mode training accuracy reaches this value (needs eval_train).
  double stop_at_train_acc = 2.0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;       // running, train-mode forward passes
  double train_eval_acc = -1.0;  // eval mode, when requested
  double val_acc = -1.0;         // -1 without a validation set
  double seconds = 0.0;
};

Json to_json(const EpochLog& e);

struct TrainResult {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  double best_val_acc = -1.0;
};

/// Minibatches of example indices: shuffled, then grouped by clip length so
/// each batch holds similar lengths; no batch has a single example unless the
/// dataset does.
std::vector<std::vector<std::size_t>> make_batches(const QaDataset& data, int batch_size, Rng& rng);

ModelInput<float> batch_input(const QaDataset& data, const std::vector<std::size_t>& batch, int min_width = 0);

/// Adam training with best-on-validation selection; the model ends holding the
/// selected weights. Throws NumericError on a non-finite loss.
TrainResult train(Model<float>& model, const QaDataset& train_set, const QaDataset* val_set, const TrainConfig& cfg);

/// Eval-mode argmax predictions, in example order.
std::vector<int> predict(const Model<float>& model, const QaDataset& data, int batch_size = 40);

double accuracy(const std::vector<int>& predicted, const QaDataset& data);

}  // namespace daqa::models
