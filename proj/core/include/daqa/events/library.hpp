#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "daqa/common/io.hpp"
#include "daqa/events/taxonomy.hpp"

namespace daqa::events {

enum class LibraryMode { Synthetic, Manifest };

struct EventInstance {
  std::string type_id;
  int instance_index = 0;
  double duration_s = 0.0;  // exact: samples / sample_rate
  double loudness = 0.0;    // loudness proxy
  std::uint64_t synthesis_seed = 0;  // Synthetic mode
  std::string source_path;           // Manifest mode, relative to the manifest directory
};

struct SyntheticLibraryConfig {
  int instances_per_type = 20;
  int sample_rate = 16000;
  std::uint64_t master_seed = 0;
  double duration_scale = 1.0;  // multiplies every type's duration range
};

/// Immutable event library. Waveforms are synthesized (or read) on demand.
class EventLibrary {
 public:
  EventLibrary(std::vector<EventType> types, std::vector<EventInstance> instances, int sample_rate,
               LibraryMode mode, std::filesystem::path base_dir = {});

  const std::vector<EventType>& types() const { return types_; }
  const std::vector<EventInstance>& instances() const { return instances_; }
  int sample_rate() const { return sample_rate_; }
  LibraryMode mode() const { return mode_; }

  std::optional<std::size_t> type_index(std::string_view id) const;
  const EventType& type(std::string_view id) const;
  const EventType& type_of(std::size_t instance) const { return types_[instance_type_[instance]]; }
  std::size_t type_index_of(std::size_t instance) const { return instance_type_[instance]; }
  const std::vector<std::size_t>& instances_of_type(std::size_t type_index) const {
    return by_type_[type_index];
  }
  std::optional<std::size_t> find_instance(std::string_view type_id, int instance_index) const;

  std::vector<float> waveform(std::size_t instance) const;

  Json to_json() const;
  static EventLibrary from_json(const Json& j, const std::filesystem::path& base_dir = {});

 private:
  std::vector<EventType> types_;
  std::vector<EventInstance> instances_;
  int sample_rate_;
  LibraryMode mode_;
  std::filesystem::path base_dir_;
  std::vector<std::size_t> instance_type_;
  std::vector<std::vector<std::size_t>> by_type_;
};

EventLibrary build_synthetic_library(const Taxonomy& taxonomy, const SyntheticLibraryConfig& config);

/// Loads a manifest {sample_rate, entries:[{type_id, instance_index, source_path}]}.
/// Paths resolve relative to the manifest's directory.
EventLibrary load_manifest(const std::filesystem::path& path, const Taxonomy& taxonomy);

}  // namespace daqa::events
