#include "daqa/events/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "daqa/common/error.hpp"
#include "daqa/common/rng.hpp"

namespace daqa::events {
namespace {

using Kind = Component::Kind;
constexpr double kPi = std::numbers::pi;

Component tone(double f, double w, double vib = 0.0, double vib_hz = 0.0) {
  return {Kind::Tone, f, w, 0.0, vib, vib_hz};
}
Component band(double f, double w, double bw = 0.08) { return {Kind::NoiseBand, f, w, bw, 0.0, 0.0}; }

// Dominant frequencies sit on a 1.2-ratio grid from 160 Hz so that every type
// owns a distinct region of the spectrum.
double grid(int k) { return 160.0 * std::pow(1.2, k); }

const std::map<std::string, Recipe>& builtin_recipes() {
  static const std::map<std::string, Recipe> table = {
      {"t000", {{band(grid(0), 1.0, 0.10), band(grid(0) * 3.1, 0.25, 0.3)}, EnvelopeShape::Swell, 0.0, 0.0}},
      {"a000", {{band(grid(1), 1.0), tone(grid(1) * 2.0, 0.2)}, EnvelopeShape::Swell, 0.0, 0.0}},
      {"c004", {{band(grid(2), 1.0), band(grid(2) * 4.0, 0.2, 0.2)}, EnvelopeShape::Swell, 0.0, 0.0}},
      {"h004", {{tone(grid(3), 1.0), tone(grid(3) * 2.0, 0.3), band(grid(3) * 6.0, 0.2)}, EnvelopeShape::Pulsed, 6.0, 0.7}},
      {"d000", {{band(grid(4), 1.0, 0.10), tone(grid(4) * 0.5, 0.2)}, EnvelopeShape::Impulse, 0.0, 0.0}},
      {"c002", {{band(grid(5), 1.0, 0.10), band(grid(5) * 3.0, 0.3, 0.3)}, EnvelopeShape::Sustained, 0.0, 0.0}},
      {"c000", {{band(grid(6), 1.0, 0.10), tone(grid(6) * 2.0, 0.15)}, EnvelopeShape::Sustained, 0.0, 0.0}},
      {"h000", {{tone(grid(7), 1.0, 0.02, 3.0), tone(grid(7) * 2.0, 0.3), tone(grid(7) * 3.0, 0.15)}, EnvelopeShape::Bursts, 4.0, 0.18}},
      {"b000", {{tone(grid(8), 1.0), tone(grid(8) * 1.5, 0.3), tone(grid(8) * 2.0, 0.25), band(grid(8) * 5.0, 0.15)}, EnvelopeShape::Sustained, 0.0, 0.0}},
      {"h001", {{tone(grid(9), 1.0, 0.04, 6.0), tone(grid(9) * 2.0, 0.25)}, EnvelopeShape::Bursts, 6.0, 0.10}},
      {"d002", {{band(grid(10), 1.0, 0.08), tone(grid(10) * 0.5, 0.25)}, EnvelopeShape::Bursts, 2.5, 0.15}},
      {"c003", {{tone(grid(11), 1.0), tone(grid(11) * 1.26, 0.3)}, EnvelopeShape::Pulsed, 1.5, 0.75}},
      {"f000", {{tone(grid(12), 1.0, 0.04, 0.5), band(grid(12) * 0.3, 0.3, 0.2)}, EnvelopeShape::Swell, 0.0, 0.0}},
      {"c001", {{band(grid(13), 1.0, 0.10), band(grid(13) * 2.2, 0.25, 0.2)}, EnvelopeShape::Bursts, 12.0, 0.04}},
      {"d001", {{tone(grid(14), 1.0), tone(grid(14) * 0.8, 0.35)}, EnvelopeShape::Pulsed, 1.0, 0.6}},
      {"h003", {{tone(grid(15), 1.0, 0.03, 5.0)}, EnvelopeShape::Sustained, 0.0, 0.0}},
      {"p000", {{tone(grid(16), 1.0), tone(grid(16) * 1.1, 0.3)}, EnvelopeShape::Pulsed, 0.5, 0.5}},
      {"b001", {{tone(grid(17), 1.0, 0.05, 8.0), tone(grid(17) * 1.3, 0.2)}, EnvelopeShape::Bursts, 3.0, 0.25}},
      {"f001", {{tone(grid(18), 1.0), tone(grid(18) * 0.5, 0.2)}, EnvelopeShape::Pulsed, 3.0, 0.5}},
      {"h002", {{band(grid(19), 1.0, 0.08), band(grid(19) * 0.35, 0.25, 0.2)}, EnvelopeShape::Bursts, 8.0, 0.02}},
  };
  return table;
}

// RBJ band-pass biquad (constant 0 dB peak gain).
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  Biquad(double fc, double q, double fs) {
    const double w0 = 2.0 * kPi * fc / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b1 = 0.0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w0) / a0;
    a2 = (1.0 - alpha) / a0;
  }
  double step(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

void normalize_rms(std::vector<double>& v, double target) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double rms = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(v.size(), 1)));
  if (rms > 0.0) {
    const double g = target / rms;
    for (double& x : v) x *= g;
  }
}

std::vector<double> envelope(const Recipe& r, std::size_t n, int fs, Rng& rng) {
  std::vector<double> env(n, 0.0);
  const double dur = static_cast<double>(n) / fs;
  auto ramp = [](double t, double len) { return len <= 0 ? 1.0 : std::clamp(t / len, 0.0, 1.0); };
  switch (r.envelope) {
    case EnvelopeShape::Impulse: {
      const double tau = std::max(dur / 4.0, 0.02);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        env[i] = ramp(t, 0.005) * std::exp(-t / tau);
      }
      break;
    }
    case EnvelopeShape::Sustained: {
      const double wob_hz = uniform_real(rng, 0.3, 1.2);
      const double phase = uniform_real(rng, 0.0, 2.0 * kPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        env[i] = ramp(t, 0.05) * ramp(dur - t, 0.1) * (0.8 + 0.2 * std::sin(2 * kPi * wob_hz * t + phase));
      }
      break;
    }
    case EnvelopeShape::Pulsed: {
      const double period = 1.0 / r.rate_hz;
      const double on = r.duty * period;
      const double offset = uniform_real(rng, 0.0, 0.2 * period);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double ph = std::fmod(t + offset, period);
        const double gate = ph < on ? ramp(ph, 0.005) * ramp(on - ph, 0.005) : 0.0;
        env[i] = ramp(t, 0.01) * ramp(dur - t, 0.01) * (0.05 + 0.95 * gate);
      }
      break;
    }
    case EnvelopeShape::Swell: {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
        env[i] = std::pow(std::sin(kPi * x), 1.5) + 0.02;
      }
      break;
    }
    case EnvelopeShape::Bursts: {
      const double len = std::max(r.duty, 0.005);
      const auto count = std::max<std::int64_t>(1, std::llround(r.rate_hz * dur));
      for (std::int64_t b = 0; b < count; ++b) {
        const double start = uniform_real(rng, 0.0, std::max(dur - len, 0.0));
        const double amp = uniform_real(rng, 0.6, 1.0);
        const auto s0 = static_cast<std::size_t>(start * fs);
        const auto s1 = std::min(n, s0 + static_cast<std::size_t>(len * fs) + 1);
        for (std::size_t i = s0; i < s1; ++i) {
          const double x = static_cast<double>(i - s0) / static_cast<double>(s1 - s0);
          env[i] = std::max(env[i], amp * std::sin(kPi * x));
        }
      }
      for (double& e : env) e = 0.03 + 0.97 * e;
      break;
    }
  }
  return env;
}

}  // namespace

Recipe recipe_for(const EventType& type) {
  const auto& table = builtin_recipes();
  if (auto it = table.find(type.id); it != table.end()) return it->second;
  // Unknown ids: hash to a frequency between grid points 0 and 19.
  const std::uint64_t h = derive_seed(0, "recipe:" + type.id);
  const double f = 160.0 * std::pow(1.2, static_cast<double>(h % 1900) / 100.0);
  Recipe r;
  r.components = {tone(f, 1.0), band(f * 2.5, 0.2)};
  r.envelope = type.discrete() ? EnvelopeShape::Impulse : EnvelopeShape::Sustained;
  return r;
}

double synthesized_duration(const EventType& type, int instance_index, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "duration:" + type.id, static_cast<std::uint64_t>(instance_index)));
  return uniform_real(rng, type.min_duration_s, type.max_duration_s);
}

std::vector<float> synthesize_event(const EventType& type, int instance_index, int sample_rate,
                                    std::uint64_t seed) {
  if (sample_rate < 8000) throw Error("synthesize_event: sample_rate must be >= 8000");
  const double duration = synthesized_duration(type, instance_index, seed);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration * sample_rate)));
  Rng rng(derive_seed(seed, "synth:" + type.id, static_cast<std::uint64_t>(instance_index)));

  const Recipe recipe = recipe_for(type);
  const double nyquist = 0.5 * sample_rate;
  const double detune = uniform_real(rng, 0.98, 1.02);
  std::vector<double> mix(n, 0.0);
  std::vector<double> part(n);
  for (const Component& c : recipe.components) {
    const double f = std::min(c.freq_hz * detune, 0.45 * sample_rate);
    if (f <= 0.0 || f >= nyquist) continue;
    if (c.kind == Kind::Tone) {
      double phase = uniform_real(rng, 0.0, 2.0 * kPi);
      const double vib_phase = uniform_real(rng, 0.0, 2.0 * kPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        const double inst = f * (1.0 + c.vibrato_depth * std::sin(2 * kPi * c.vibrato_hz * t + vib_phase));
        phase += 2.0 * kPi * inst / sample_rate;
        part[i] = std::sin(phase);
      }
    } else {
      Biquad bq(f, 1.0 / std::max(c.bandwidth_ratio, 1e-3), sample_rate);
      for (std::size_t i = 0; i < n; ++i) part[i] = bq.step(standard_normal(rng));
    }
    normalize_rms(part, c.weight);
    for (std::size_t i = 0; i < n; ++i) mix[i] += part[i];
  }

  const std::vector<double> env = envelope(recipe, n, sample_rate, rng);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mix[i] *= env[i];
    peak = std::max(peak, std::abs(mix[i]));
  }
  const double gain = uniform_real(rng, 0.25, 0.95);
  std::vector<float> out(n);
  const double scale = peak > 0.0 ? gain / peak : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(std::clamp(mix[i] * scale, -1.0, 1.0));
  }
  return out;
}

double compute_loudness_proxy(std::span<const float> waveform, int /*sample_rate*/) {
  if (waveform.empty()) throw Error("compute_loudness_proxy: empty waveform");
  double ss = 0.0;
  for (float x : waveform) ss += static_cast<double>(x) * x;
  const double rms = std::sqrt(ss / static_cast<double>(waveform.size()));
  if (rms == 0.0) return 0.0;
  return std::pow(rms / kLoudnessReference, kLoudnessExponent);
}

}  // namespace daqa::events
