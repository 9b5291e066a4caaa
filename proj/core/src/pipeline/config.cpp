#include "daqa/pipeline/config.hpp"

#include "daqa/common/error.hpp"

namespace daqa::pipeline {

Json default_config_json() {
  return {
      {"output", "run"},
      {"taxonomy", ""},
      {"catalog", ""},
      {"synonyms", ""},
      {"master_seed", 0},
      {"low_resource", false},
      {"counts", {{"n_train", 80}, {"n_val", 10}, {"n_test", 10}}},
      {"attempts", {{"train", 5}, {"val", 10}, {"test", 10}}},
      {"library", {{"instances_per_type", 20}, {"sample_rate", 16000}, {"duration_scale", 1.0}, {"manifest", ""}}},
      {"clips", {{"snr_db", 30.0}, {"dedup_retry_budget", 100}}},
      {"questions", {{"synonym_p", 0.5}, {"template_draws", 20}, {"gap_threshold", 0.05}, {"warmup", 50}}},
      {"features", {{"n_mels", 64}, {"frame_len_s", 0.025}, {"frame_stride_s", 0.010}, {"log_floor", 1e-10}}},
      {"model", models::to_json(models::ModelConfig::defaults(models::ModelKind::MALiMo))},
      {"train",
       {{"epochs", 10}, {"batch_size", 40}, {"lr", 1e-4}, {"weight_decay", 1e-5}, {"decoupled_weight_decay", true}}},
      {"eval", {{"split", "test"}, {"model", true}, {"logistic_max_epochs", 3000}}},
      {"saliency", {{"split", "test"}, {"count", 5}}},
  };
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw SchemaError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::exception&) {
    value = text;
  }
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw SchemaError("unknown config key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

Json load_config_json(const std::filesystem::path& path) {
  Json j = default_config_json();
  j.merge_patch(read_json(path));
  return j;
}

namespace {

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

RunConfig RunConfig::from_json(const Json& in, const std::filesystem::path& base_dir) {
  Json j = default_config_json();
  j.merge_patch(in);
  RunConfig c;
  try {
    c.output = resolve(j.at("output").get<std::string>(), base_dir);
    c.taxonomy = resolve(j.at("taxonomy").get<std::string>(), base_dir);
    c.catalog = resolve(j.at("catalog").get<std::string>(), base_dir);
    c.synonyms = resolve(j.at("synonyms").get<std::string>(), base_dir);
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.low_resource = j.at("low_resource").get<bool>();
    const auto& counts = j.at("counts");
    c.n_train = counts.at("n_train");
    c.n_val = counts.at("n_val");
    c.n_test = counts.at("n_test");
    const auto& att = j.at("attempts");
    c.attempts_train = att.at("train");
    c.attempts_val = att.at("val");
    c.attempts_test = att.at("test");
    if (c.low_resource) c.attempts_train = 1;
    const auto& lib = j.at("library");
    c.library.instances_per_type = lib.at("instances_per_type");
    c.library.sample_rate = lib.at("sample_rate");
    c.library.duration_scale = lib.at("duration_scale");
    c.library.master_seed = c.master_seed;
    c.manifest = resolve(lib.at("manifest").get<std::string>(), base_dir);
    const auto& clips = j.at("clips");
    c.snr_db = clips.at("snr_db");
    c.dedup_retry_budget = clips.at("dedup_retry_budget");
    const auto& q = j.at("questions");
    c.synonym_p = q.at("synonym_p");
    c.template_draws = q.at("template_draws");
    c.balance.gap_threshold = q.at("gap_threshold");
    c.balance.warmup = q.at("warmup");
    const auto& f = j.at("features");
    c.mfsc.n_mels = f.at("n_mels");
    c.mfsc.frame_len_s = f.at("frame_len_s");
    c.mfsc.frame_stride_s = f.at("frame_stride_s");
    c.mfsc.log_floor = f.at("log_floor");
    c.model = models::model_config_from_json(j.at("model"));
    c.model.n_mels = c.mfsc.n_mels;
    const auto& t = j.at("train");
    c.epochs = t.at("epochs");
    c.batch_size = t.at("batch_size");
    c.adam.lr = t.at("lr");
    c.adam.weight_decay = t.at("weight_decay");
    c.adam.decoupled = t.at("decoupled_weight_decay");
    const auto& e = j.at("eval");
    c.eval_split = e.at("split");
    c.eval_model = e.at("model");
    c.logistic_max_epochs = e.at("logistic_max_epochs");
    const auto& s = j.at("saliency");
    c.saliency_split = s.at("split");
    c.saliency_count = s.at("count");
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("invalid run config: ") + ex.what());
  }
  if (c.n_train < 1 || c.n_val < 0 || c.n_test < 0) throw SchemaError("invalid run config: clip counts");
  if (c.epochs < 1 || c.batch_size < 2) throw SchemaError("invalid run config: train.epochs >= 1 and train.batch_size >= 2");
  c.resolved = j;
  return c;
}

}  // namespace daqa::pipeline
