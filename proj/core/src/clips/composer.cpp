#include "daqa/clips/composer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>
#include <utility>

#include "daqa/common/error.hpp"
#include "daqa/events/wav.hpp"

namespace daqa::clips {

std::vector<std::size_t> sample_event_sequence(const events::EventLibrary& library, Rng& rng) {
  const auto& insts = library.instances();
  if (insts.empty()) throw Error("sample_event_sequence: empty library");
  const auto length = static_cast<std::size_t>(uniform_int(rng, kMinEvents, kMaxEvents));
  std::vector<std::size_t> seq;
  seq.reserve(length);
  // Bound on redraws; a library with one Continuous type only cannot satisfy the constraint.
  constexpr int kMaxRedraws = 10000;
  while (seq.size() < length) {
    int tries = 0;
    while (true) {
      const std::size_t cand = uniform_index(rng, insts.size());
      if (!seq.empty()) {
        const std::size_t prev_t = library.type_index_of(seq.back());
        const std::size_t t = library.type_index_of(cand);
        if (t == prev_t && !library.types()[t].discrete()) {
          if (++tries > kMaxRedraws) throw GenerationError("cannot find a valid successor event");
          continue;
        }
      }
      seq.push_back(cand);
      break;
    }
  }
  return seq;
}

std::vector<double> compose_timeline(std::span<const double> durations, std::span<const double> overlaps) {
  if (durations.empty()) throw Error("compose_timeline: empty sequence");
  if (overlaps.size() + 1 != durations.size()) throw Error("compose_timeline: overlap count mismatch");
  std::vector<double> starts(durations.size(), 0.0);
  for (std::size_t i = 1; i < durations.size(); ++i)
    starts[i] = starts[i - 1] + durations[i - 1] - overlaps[i - 1];
  return starts;
}

namespace {

std::size_t sample_count(const events::EventLibrary& lib, std::size_t inst) {
  return static_cast<std::size_t>(std::llround(lib.instances()[inst].duration_s * lib.sample_rate()));
}

}  // namespace

ClipLayout layout_clip(std::span<const std::size_t> sequence, const events::EventLibrary& library, Rng& rng,
                       const RenderOptions& options, std::string id) {
  if (sequence.empty()) throw Error("render_clip: empty sequence");
  const int sr = library.sample_rate();
  ClipLayout out;
  out.start_samples.assign(sequence.size(), 0);
  const auto max_overlap = static_cast<std::int64_t>(std::floor(options.max_overlap_s * sr));
  std::int64_t total = 0;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i > 0) {
      const auto prev_len = static_cast<std::int64_t>(sample_count(library, sequence[i - 1]));
      const std::int64_t cap = std::min(max_overlap, prev_len - 1);
      const double u = uniform01(rng);
      const auto overlap =
          std::min(cap, static_cast<std::int64_t>(std::floor(u * static_cast<double>(cap + 1))));
      out.start_samples[i] = out.start_samples[i - 1] + prev_len - overlap;
    }
    total = std::max(total, out.start_samples[i] + static_cast<std::int64_t>(sample_count(library, sequence[i])));
  }

  ClipAnnotation& a = out.annotation;
  a.clip_id = std::move(id);
  a.has_noise = options.noise;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto& inst = library.instances()[sequence[i]];
    EventOccurrence o;
    o.type_id = inst.type_id;
    o.instance_index = inst.instance_index;
    o.start_s = static_cast<double>(out.start_samples[i]) / sr;
    o.end_s = static_cast<double>(out.start_samples[i] + static_cast<std::int64_t>(sample_count(library, sequence[i]))) / sr;
    o.loudness = inst.loudness;
    o.ordinal = static_cast<int>(i) + 1;
    a.events.push_back(std::move(o));
  }
  a.total_duration_s = static_cast<double>(total) / sr;
  return out;
}

RenderedClip render_clip(std::span<const std::size_t> sequence, const events::EventLibrary& library, Rng& rng,
                         const RenderOptions& options, std::string id) {
  ClipLayout layout = layout_clip(sequence, library, rng, options, std::move(id));
  const int sr = library.sample_rate();
  const auto total = static_cast<std::size_t>(std::llround(layout.annotation.total_duration_s * sr));
  std::vector<double> mix(total, 0.0);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const std::vector<float> wave = library.waveform(sequence[i]);
    const auto s0 = static_cast<std::size_t>(layout.start_samples[i]);
    for (std::size_t k = 0; k < wave.size() && s0 + k < total; ++k) mix[s0 + k] += wave[k];
  }
  if (options.noise) {
    double ss = 0.0;
    for (double x : mix) ss += x * x;
    const double rms = std::sqrt(ss / static_cast<double>(mix.size()));
    const double sigma = rms / std::pow(10.0, options.snr_db / 20.0);
    for (double& x : mix) x += sigma * standard_normal(rng);
  }
  double peak = 0.0;
  for (double x : mix) peak = std::max(peak, std::abs(x));
  const double scale = peak > 1.0 ? 1.0 / peak : 1.0;

  RenderedClip out;
  out.waveform.resize(mix.size());
  for (std::size_t i = 0; i < mix.size(); ++i) out.waveform[i] = static_cast<float>(mix[i] * scale);
  out.annotation = std::move(layout.annotation);
  return out;
}

std::string_view to_string(SplitName s) {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Validation: return "val";
    case SplitName::Test: return "test";
  }
  return "?";
}

const DatasetSplit& GeneratedSplits::get(SplitName s) const {
  switch (s) {
    case SplitName::Train: return train;
    case SplitName::Validation: return validation;
    default: return test;
  }
}

DatasetSplit& GeneratedSplits::get(SplitName s) {
  return const_cast<DatasetSplit&>(std::as_const(*this).get(s));
}

std::string clip_id(SplitName split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(to_string(split)) + "_" + buf;
}

namespace {

std::string sequence_key(const events::EventLibrary& lib, const std::vector<std::size_t>& seq) {
  std::string key;
  for (std::size_t i : seq) {
    if (!key.empty()) key += ',';
    key += lib.instances()[i].type_id + "#" + std::to_string(lib.instances()[i].instance_index);
  }
  return key;
}

// Exactly floor(n/2) noisy clips, chosen by a split-level shuffle.
std::vector<bool> noise_flags(std::uint64_t master, SplitName split, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(master, "noise:" + std::string(to_string(split))));
  shuffle(idx, rng);
  std::vector<bool> flags(n, false);
  for (std::size_t i = 0; i < n / 2; ++i) flags[idx[i]] = true;
  return flags;
}

Rng clip_rng(const SplitConfig& c, SplitName split, std::size_t index, std::uint64_t attempt) {
  return Rng(derive_seed(c.master_seed, "clip:" + std::string(to_string(split)), index, attempt));
}

RenderOptions options_for(const SplitConfig& c, bool noise) {
  RenderOptions opt;
  opt.noise = noise;
  opt.snr_db = c.snr_db;
  return opt;
}

}  // namespace

GeneratedSplits generate_split(const SplitConfig& config, const events::EventLibrary& library) {
  if (config.n_train < 1 || config.n_val < 1 || config.n_test < 1)
    throw GenerationError("split counts must be >= 1");
  GeneratedSplits out;
  std::unordered_set<std::string> train_keys;
  const int counts[] = {config.n_train, config.n_val, config.n_test};
  int k = 0;
  for (SplitName name : kAllSplits) {
    DatasetSplit& split = out.get(name);
    split.name = name;
    const auto n = static_cast<std::size_t>(counts[k++]);
    const auto flags = noise_flags(config.master_seed, name, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt >= static_cast<std::uint64_t>(config.dedup_retry_budget))
          throw GenerationError("clip " + clip_id(name, i) + ": dedup retry budget exhausted");
        Rng rng = clip_rng(config, name, i, attempt);
        std::vector<std::size_t> seq = sample_event_sequence(library, rng);
        const std::string key = sequence_key(library, seq);
        if (name != SplitName::Train && train_keys.count(key)) continue;
        if (name == SplitName::Train) train_keys.insert(key);
        ClipLayout layout = layout_clip(seq, library, rng, options_for(config, flags[i]), clip_id(name, i));
        split.clips.push_back(std::move(layout.annotation));
        split.sequences.push_back(std::move(seq));
        split.attempts.push_back(attempt);
        break;
      }
    }
  }
  return out;
}

RenderedClip render_split_clip(const SplitConfig& config, const events::EventLibrary& library,
                               const DatasetSplit& split, std::size_t index) {
  Rng rng = clip_rng(config, split.name, index, split.attempts.at(index));
  const std::vector<std::size_t> seq = sample_event_sequence(library, rng);
  return render_clip(seq, library, rng, options_for(config, split.clips.at(index).has_noise),
                     split.clips[index].clip_id);
}

void write_split(const std::filesystem::path& root, const SplitConfig& config, const events::EventLibrary& library,
                 const DatasetSplit& split, bool write_audio) {
  const std::string name(to_string(split.name));
  if (write_audio) {
    for (std::size_t i = 0; i < split.clips.size(); ++i) {
      const RenderedClip clip = render_split_clip(config, library, split, i);
      events::write_wav(root / name / (clip.annotation.clip_id + ".wav"), clip.waveform, library.sample_rate());
    }
  }
  write_annotations(root / ("annotations_" + name + ".jsonl"), split.clips);
}

}  // namespace daqa::clips
