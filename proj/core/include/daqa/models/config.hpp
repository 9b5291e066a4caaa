#pragma once

#include <string>

#include "daqa/common/io.hpp"

namespace daqa::models {

enum class ModelKind { FCN, FiLM, MALiMo };

/// Which controller modulates the first and second layer of a MALiMo block.
enum class ModulationOrder { QuestionAudio, AudioQuestion };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModulationOrder o);
ModulationOrder modulation_order_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::MALiMo;
  int stem_blocks = 3;
  int stem_base_filters = 32;
  int modulated_units = 1;  // FiLM layers, or MALiMo blocks
  int controller_hidden = 512;
  int controller_layers = 2;
  int embed_dim = 256;
  int vocab_size = 0;
  int classes = 36;
  int scale = 1;  // divides every width except `classes`
  int n_mels = 64;
  ModulationOrder order = ModulationOrder::QuestionAudio;

  int block_channels = 128;
  int head_channels = 512;
  int head_hidden = 1024;
  int fcn_top_channels = 1024;
  int fcn_max_filters = 512;
  int audio_pool = 8;

  /// Full-size defaults for a kind (FCN uses 5 stem blocks).
  static ModelConfig defaults(ModelKind kind);

  int scaled(int width) const;
  int stem_filters(int block) const;
  void validate() const;
};

Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

}  // namespace daqa::models
