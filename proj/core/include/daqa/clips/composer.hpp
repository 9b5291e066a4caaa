#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "daqa/clips/annotation.hpp"
#include "daqa/common/rng.hpp"
#include "daqa/events/library.hpp"

namespace daqa::clips {

/// Draws 5..12 instance indices; a draw whose type is Continuous and equal to
/// its predecessor's type is rejected and redrawn.
std::vector<std::size_t> sample_event_sequence(const events::EventLibrary& library, Rng& rng);

/// Start times for back-to-back events given per-splice overlaps (seconds).
/// start[i+1] = end[i] - overlaps[i]; overlaps.size() == durations.size() - 1.
std::vector<double> compose_timeline(std::span<const double> durations, std::span<const double> overlaps);

struct RenderOptions {
  bool noise = false;
  double snr_db = 30.0;
  double max_overlap_s = kMaxOverlapS;
};

/// Overlap draws and annotation, without audio. render_clip is layout_clip
/// followed by mixing; both consume the RNG identically up to this point.
struct ClipLayout {
  ClipAnnotation annotation;
  std::vector<std::int64_t> start_samples;
};
ClipLayout layout_clip(std::span<const std::size_t> sequence, const events::EventLibrary& library, Rng& rng,
                       const RenderOptions& options, std::string clip_id);

struct RenderedClip {
  std::vector<float> waveform;
  ClipAnnotation annotation;
};

/// Mixes the sequence with random overlaps in [0, max_overlap_s] (sample
/// aligned, and always shorter than the preceding event), optionally adds
/// Gaussian noise at `snr_db`, then scales down so the peak is <= 1.
RenderedClip render_clip(std::span<const std::size_t> sequence, const events::EventLibrary& library, Rng& rng,
                         const RenderOptions& options, std::string clip_id);

enum class SplitName { Train, Validation, Test };
std::string_view to_string(SplitName s);
inline constexpr SplitName kAllSplits[] = {SplitName::Train, SplitName::Validation, SplitName::Test};

struct SplitConfig {
  int n_train = 80;
  int n_val = 10;
  int n_test = 10;
  std::uint64_t master_seed = 0;
  double snr_db = 30.0;
  int dedup_retry_budget = 100;
};

struct DatasetSplit {
  SplitName name = SplitName::Train;
  std::vector<ClipAnnotation> clips;
  std::vector<std::vector<std::size_t>> sequences;  // instance indices, parallel to clips
  std::vector<std::uint64_t> attempts;               // dedup attempt that produced each clip
};

struct GeneratedSplits {
  DatasetSplit train, validation, test;
  const DatasetSplit& get(SplitName s) const;
  DatasetSplit& get(SplitName s);
};

/// Samples all three splits (annotations only; waveforms are rendered again
/// on demand with render_split_clip, which is bitwise reproducible).
GeneratedSplits generate_split(const SplitConfig& config, const events::EventLibrary& library);

/// Re-renders clip `index` of `split` exactly as generate_split produced it.
RenderedClip render_split_clip(const SplitConfig& config, const events::EventLibrary& library,
                               const DatasetSplit& split, std::size_t index);

/// Writes <root>/<split>/<clip_id>.wav and <root>/annotations_<split>.jsonl.
void write_split(const std::filesystem::path& root, const SplitConfig& config,
                 const events::EventLibrary& library, const DatasetSplit& split, bool write_audio = true);

std::string clip_id(SplitName split, std::size_t index);

}  // namespace daqa::clips
