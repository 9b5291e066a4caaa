#include "daqa/events/library.hpp"

#include <cmath>
#include <set>

#include "daqa/common/error.hpp"
#include "daqa/common/rng.hpp"
#include "daqa/events/synth.hpp"
#include "daqa/events/wav.hpp"

namespace daqa::events {
namespace fs = std::filesystem;

EventLibrary::EventLibrary(std::vector<EventType> types, std::vector<EventInstance> instances,
                           int sample_rate, LibraryMode mode, fs::path base_dir)
    : types_(std::move(types)),
      instances_(std::move(instances)),
      sample_rate_(sample_rate),
      mode_(mode),
      base_dir_(std::move(base_dir)) {
  if (types_.empty()) throw SchemaError("no event types");
  if (sample_rate_ < 8000) throw SchemaError("sample_rate must be >= 8000");
  by_type_.resize(types_.size());
  std::set<std::pair<std::string, int>> seen;
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    auto t = type_index(inst.type_id);
    if (!t) throw SchemaError("instance references unknown type_id '" + inst.type_id + "'");
    if (!seen.insert({inst.type_id, inst.instance_index}).second)
      throw SchemaError("duplicate instance " + inst.type_id + "#" + std::to_string(inst.instance_index));
    if (!(inst.duration_s > 0.0) || !std::isfinite(inst.duration_s))
      throw SchemaError("instance " + inst.type_id + "#" + std::to_string(inst.instance_index) +
                        " has non-positive duration");
    if (!(inst.loudness > 0.0) || !std::isfinite(inst.loudness))
      throw SchemaError("instance " + inst.type_id + "#" + std::to_string(inst.instance_index) +
                        " has non-positive loudness");
    instance_type_.push_back(*t);
    by_type_[*t].push_back(i);
  }
  for (std::size_t t = 0; t < types_.size(); ++t)
    if (by_type_[t].empty()) throw SchemaError("event type '" + types_[t].id + "' has no instances");
}

std::optional<std::size_t> EventLibrary::type_index(std::string_view id) const {
  for (std::size_t i = 0; i < types_.size(); ++i)
    if (types_[i].id == id) return i;
  return std::nullopt;
}

const EventType& EventLibrary::type(std::string_view id) const {
  auto i = type_index(id);
  if (!i) throw SchemaError("unknown event type id '" + std::string(id) + "'");
  return types_[*i];
}

std::optional<std::size_t> EventLibrary::find_instance(std::string_view type_id, int instance_index) const {
  auto t = type_index(type_id);
  if (!t) return std::nullopt;
  for (std::size_t i : by_type_[*t])
    if (instances_[i].instance_index == instance_index) return i;
  return std::nullopt;
}

std::vector<float> EventLibrary::waveform(std::size_t instance) const {
  const auto& inst = instances_.at(instance);
  if (mode_ == LibraryMode::Synthetic) {
    return synthesize_event(type_of(instance), inst.instance_index, sample_rate_, inst.synthesis_seed);
  }
  WavData wav = read_wav(base_dir_ / inst.source_path);
  if (wav.sample_rate != sample_rate_)
    throw LoadError("sample rate mismatch in " + inst.source_path + ": " + std::to_string(wav.sample_rate) +
                    " vs library " + std::to_string(sample_rate_));
  return std::move(wav.samples);
}

Json EventLibrary::to_json() const {
  Json insts = Json::array();
  for (const auto& i : instances_) {
    Json e{{"type_id", i.type_id},
           {"instance_index", i.instance_index},
           {"duration_s", i.duration_s},
           {"loudness", i.loudness}};
    if (mode_ == LibraryMode::Synthetic)
      e["synthesis_seed"] = i.synthesis_seed;
    else
      e["source_path"] = i.source_path;
    insts.push_back(std::move(e));
  }
  return Json{{"mode", mode_ == LibraryMode::Synthetic ? "synthetic" : "manifest"},
              {"sample_rate", sample_rate_},
              {"types", Taxonomy(types_).to_json()["types"]},
              {"instances", insts}};
}

EventLibrary EventLibrary::from_json(const Json& j, const fs::path& base_dir) {
  try {
    const Taxonomy tax = Taxonomy::from_json(j);
    const LibraryMode mode = j.at("mode").get<std::string>() == "synthetic" ? LibraryMode::Synthetic
                                                                           : LibraryMode::Manifest;
    std::vector<EventInstance> insts;
    for (const auto& e : j.at("instances")) {
      EventInstance i;
      i.type_id = e.at("type_id").get<std::string>();
      i.instance_index = e.at("instance_index").get<int>();
      i.duration_s = e.at("duration_s").get<double>();
      i.loudness = e.at("loudness").get<double>();
      if (e.contains("synthesis_seed")) i.synthesis_seed = e["synthesis_seed"].get<std::uint64_t>();
      if (e.contains("source_path")) i.source_path = e["source_path"].get<std::string>();
      insts.push_back(std::move(i));
    }
    return EventLibrary(tax.types(), std::move(insts), j.at("sample_rate").get<int>(), mode, base_dir);
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("event library: ") + e.what());
  }
}

EventLibrary build_synthetic_library(const Taxonomy& taxonomy, const SyntheticLibraryConfig& config) {
  if (config.instances_per_type < 1) throw SchemaError("instances_per_type must be >= 1");
  if (!(config.duration_scale > 0.0)) throw SchemaError("duration_scale must be > 0");
  std::vector<EventType> types = taxonomy.types();
  for (auto& t : types) {
    t.min_duration_s *= config.duration_scale;
    t.max_duration_s *= config.duration_scale;
  }
  std::vector<EventInstance> instances;
  for (const auto& t : types) {
    for (int k = 0; k < config.instances_per_type; ++k) {
      EventInstance inst;
      inst.type_id = t.id;
      inst.instance_index = k;
      inst.synthesis_seed = derive_seed(config.master_seed, "event:" + t.id, static_cast<std::uint64_t>(k));
      const std::vector<float> wave = synthesize_event(t, k, config.sample_rate, inst.synthesis_seed);
      inst.duration_s = static_cast<double>(wave.size()) / config.sample_rate;
      inst.loudness = compute_loudness_proxy(wave, config.sample_rate);
      instances.push_back(std::move(inst));
    }
  }
  return EventLibrary(std::move(types), std::move(instances), config.sample_rate, LibraryMode::Synthetic);
}

EventLibrary load_manifest(const fs::path& path, const Taxonomy& taxonomy) {
  if (!fs::exists(path)) throw LoadError("manifest not found: " + path.string());
  const Json j = read_json(path);
  if (!j.contains("sample_rate")) throw SchemaError("manifest " + path.string() + ": missing sample_rate");
  const int sample_rate = j["sample_rate"].get<int>();
  const Json entries = j.value("entries", Json::array());
  if (entries.empty()) throw SchemaError("no event types");

  const fs::path base = path.parent_path();  // source paths are stored resolved
  std::vector<EventInstance> instances;
  std::set<std::string> used;
  std::string failures;
  for (const auto& e : entries) {
    EventInstance inst;
    try {
      inst.type_id = e.at("type_id").get<std::string>();
      inst.instance_index = e.at("instance_index").get<int>();
      inst.source_path = e.at("source_path").get<std::string>();
    } catch (const Json::exception& ex) {
      throw SchemaError("manifest entry: " + std::string(ex.what()));
    }
    if (!taxonomy.index_of(inst.type_id))
      throw SchemaError("manifest references unknown type_id '" + inst.type_id + "'");
    const std::string label = inst.type_id + "#" + std::to_string(inst.instance_index);
    try {
      inst.source_path = (base / inst.source_path).lexically_normal().string();
      const WavData wav = read_wav(inst.source_path);
      if (wav.sample_rate != sample_rate)
        throw LoadError("sample rate " + std::to_string(wav.sample_rate) + " != manifest " +
                        std::to_string(sample_rate));
      if (wav.samples.empty()) throw LoadError("empty audio");
      inst.duration_s = static_cast<double>(wav.samples.size()) / sample_rate;
      inst.loudness = compute_loudness_proxy(wav.samples, sample_rate);
      if (!(inst.loudness > 0.0)) throw LoadError("silent audio");
    } catch (const Error& ex) {
      failures += "\n  " + label + " (" + inst.source_path + "): " + ex.what();
      continue;
    }
    used.insert(inst.type_id);
    instances.push_back(std::move(inst));
  }
  if (!failures.empty()) throw LoadError("manifest " + path.string() + ": unreadable audio entries:" + failures);

  std::vector<EventType> types;
  for (const auto& t : taxonomy.types())
    if (used.count(t.id)) types.push_back(t);
  return EventLibrary(std::move(types), std::move(instances), sample_rate, LibraryMode::Manifest);
}

}  // namespace daqa::events
