#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "daqa/common/io.hpp"
#include "daqa/events/library.hpp"
#include "daqa/features/mfsc.hpp"
#include "daqa/models/config.hpp"
#include "daqa/nn/optim.hpp"
#include "daqa/questions/balance.hpp"

namespace daqa::pipeline {

/// Every default value of a run, as the JSON document a config file patches.
Json default_config_json();

/// Sets a dotted key ("train.epochs=3"). The value is parsed as JSON when
/// possible, otherwise taken as a string. Throws SchemaError on a bad key.
void apply_override(Json& config, const std::string& assignment);

struct RunConfig {
  std::filesystem::path output;
  std::filesystem::path taxonomy, catalog, synonyms;  // empty: packaged data
  std::uint64_t master_seed = 0;
  bool low_resource = false;

  int n_train = 80, n_val = 10, n_test = 10;
  int attempts_train = 5, attempts_val = 10, attempts_test = 10;

  events::SyntheticLibraryConfig library;
  std::filesystem::path manifest;  // non-empty: manifest mode
  double snr_db = 30.0;
  int dedup_retry_budget = 100;

  double synonym_p = 0.5;
  int template_draws = 20;
  questions::BalanceConfig balance;

  features::MfscConfig mfsc;

  models::ModelConfig model;
  int epochs = 10;
  int batch_size = 40;
  nn::AdamConfig adam;

  std::string eval_split = "test";
  bool eval_model = true;
  int logistic_max_epochs = 3000;

  std::string saliency_split = "test";
  int saliency_count = 5;

  Json resolved;  // the merged document this config was read from

  /// Relative paths resolve against `base_dir`.
  static RunConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
};

/// default_config_json() merge-patched by the file at `path`.
Json load_config_json(const std::filesystem::path& path);

}  // namespace daqa::pipeline
