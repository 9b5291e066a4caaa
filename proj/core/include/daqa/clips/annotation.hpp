#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "daqa/common/io.hpp"
#include "daqa/events/taxonomy.hpp"

namespace daqa::clips {

struct EventOccurrence {
  std::string type_id;
  int instance_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double loudness = 0.0;
  int ordinal = 0;  // 1-based rank by start time

  double duration() const { return end_s - start_s; }
};

struct ClipAnnotation {
  std::string clip_id;
  std::vector<EventOccurrence> events;
  bool has_noise = false;
  double total_duration_s = 0.0;

  /// Ordered "type#index" tuple used for split deduplication.
  std::string sequence_key() const;
};

inline constexpr int kMinEvents = 5;
inline constexpr int kMaxEvents = 12;
inline constexpr double kMaxOverlapS = 0.5;

Json to_json(const ClipAnnotation& a);
ClipAnnotation annotation_from_json(const Json& j);

/// Human-readable violations of the clip invariants (empty when valid):
/// event count, sort order, ordinals, overlap bound, adjacent continuous
/// repeats, total duration.
std::vector<std::string> check_annotation(const ClipAnnotation& clip, const events::Taxonomy& taxonomy);

std::vector<ClipAnnotation> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<ClipAnnotation>& clips);

}  // namespace daqa::clips
