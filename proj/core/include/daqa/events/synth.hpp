#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "daqa/events/taxonomy.hpp"

namespace daqa::events {

/// Spectral component of a synthetic event.
struct Component {
  enum class Kind { Tone, NoiseBand };
  Kind kind = Kind::Tone;
  double freq_hz = 440.0;
  double weight = 1.0;          // target RMS share before the envelope
  double bandwidth_ratio = 0.08;  // NoiseBand only: bandwidth / centre
  double vibrato_depth = 0.0;   // Tone only: relative frequency deviation
  double vibrato_hz = 0.0;
};

enum class EnvelopeShape { Impulse, Sustained, Pulsed, Swell, Bursts };

/// Fixed per-type signature: a dominant component plus minor ones, and an envelope.
struct Recipe {
  std::vector<Component> components;  // components[0] is the dominant one
  EnvelopeShape envelope = EnvelopeShape::Sustained;
  double rate_hz = 2.0;   // Pulsed / Bursts repetition rate
  double duty = 0.5;      // Pulsed on-fraction, Bursts burst length in seconds
};

/// Signature for a type id. Ids outside the default taxonomy get a signature
/// hashed from the id.
Recipe recipe_for(const EventType& type);

/// Duration (seconds) the synthesizer will produce for this (type, index, seed).
double synthesized_duration(const EventType& type, int instance_index, std::uint64_t seed);

/// Deterministic synthetic waveform for one event instance. Peak amplitude
/// equals a seed-derived gain in [0.25, 0.95].
std::vector<float> synthesize_event(const EventType& type, int instance_index, int sample_rate,
                                    std::uint64_t seed);

/// Loudness proxy (RMS / 2e-5)^0.6; zero for an all-zero waveform.
double compute_loudness_proxy(std::span<const float> waveform, int sample_rate);

inline constexpr double kLoudnessReference = 2e-5;
inline constexpr double kLoudnessExponent = 0.6;

}  // namespace daqa::events
