#include "daqa/models/config.hpp"

#include <algorithm>

#include "daqa/common/error.hpp"

namespace daqa::models {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::FCN: return "fcn";
    case ModelKind::FiLM: return "film";
    case ModelKind::MALiMo: return "malimo";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "fcn") return ModelKind::FCN;
  if (l == "film") return ModelKind::FiLM;
  if (l == "malimo") return ModelKind::MALiMo;
  throw SchemaError("unknown model kind '" + s + "' (expected fcn, film or malimo)");
}

std::string to_string(ModulationOrder o) {
  return o == ModulationOrder::QuestionAudio ? "question_audio" : "audio_question";
}

ModulationOrder modulation_order_from_string(const std::string& s) {
  if (s == "question_audio") return ModulationOrder::QuestionAudio;
  if (s == "audio_question") return ModulationOrder::AudioQuestion;
  throw SchemaError("unknown modulation order '" + s + "'");
}

ModelConfig ModelConfig::defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.stem_blocks = kind == ModelKind::FCN ? 5 : 3;
  c.modulated_units = kind == ModelKind::FiLM ? 2 : 1;
  if (kind == ModelKind::FCN) c.modulated_units = 0;
  return c;
}

int ModelConfig::scaled(int width) const { return std::max(1, width / scale); }

int ModelConfig::stem_filters(int block) const {
  return scaled(std::min(stem_base_filters << block, kind == ModelKind::FCN ? fcn_max_filters : 1 << 30));
}

void ModelConfig::validate() const {
  if (scale < 1) throw SchemaError("model scale must be >= 1");
  if (classes < 2) throw SchemaError("model needs at least 2 classes");
  if (stem_blocks < 1) throw SchemaError("stem_blocks must be >= 1");
  switch (kind) {
    case ModelKind::FCN: break;
    case ModelKind::FiLM:
      if (modulated_units < 1 || modulated_units > 12) throw SchemaError("FiLM modulated_units must be in 1..12");
      break;
    case ModelKind::MALiMo:
      if (modulated_units < 1 || modulated_units > 6) throw SchemaError("MALiMo modulated_units must be in 1..6");
      break;
  }
  if (kind != ModelKind::FCN && vocab_size < 2) throw SchemaError("question models need vocab_size >= 2");
}

Json to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"stem_blocks", c.stem_blocks},
          {"stem_base_filters", c.stem_base_filters},
          {"modulated_units", c.modulated_units},
          {"controller_hidden", c.controller_hidden},
          {"controller_layers", c.controller_layers},
          {"embed_dim", c.embed_dim},
          {"vocab_size", c.vocab_size},
          {"classes", c.classes},
          {"scale", c.scale},
          {"n_mels", c.n_mels},
          {"order", to_string(c.order)},
          {"block_channels", c.block_channels},
          {"head_channels", c.head_channels},
          {"head_hidden", c.head_hidden},
          {"fcn_top_channels", c.fcn_top_channels},
          {"fcn_max_filters", c.fcn_max_filters},
          {"audio_pool", c.audio_pool}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c = ModelConfig::defaults(model_kind_from_string(j.value("kind", std::string("malimo"))));
  auto get = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = j.at(key).get<int>();
  };
  get("stem_blocks", c.stem_blocks);
  get("stem_base_filters", c.stem_base_filters);
  get("modulated_units", c.modulated_units);
  get("controller_hidden", c.controller_hidden);
  get("controller_layers", c.controller_layers);
  get("embed_dim", c.embed_dim);
  get("vocab_size", c.vocab_size);
  get("classes", c.classes);
  get("scale", c.scale);
  get("n_mels", c.n_mels);
  get("block_channels", c.block_channels);
  get("head_channels", c.head_channels);
  get("head_hidden", c.head_hidden);
  get("fcn_top_channels", c.fcn_top_channels);
  get("fcn_max_filters", c.fcn_max_filters);
  get("audio_pool", c.audio_pool);
  if (j.contains("order")) c.order = modulation_order_from_string(j.at("order").get<std::string>());
  return c;
}

}  // namespace daqa::models
