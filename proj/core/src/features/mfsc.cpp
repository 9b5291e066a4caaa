#include "daqa/features/mfsc.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "daqa/common/error.hpp"

namespace daqa::features {

static_assert(std::endian::native == std::endian::little, "feature files are written as native little-endian");

int frame_length(int sample_rate, const MfscConfig& c) {
  return static_cast<int>(std::lround(c.frame_len_s * sample_rate));
}

int frame_stride(int sample_rate, const MfscConfig& c) {
  return static_cast<int>(std::lround(c.frame_stride_s * sample_rate));
}

int fft_size(int sample_rate, const MfscConfig& c) {
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(frame_length(sample_rate, c))));
}

std::size_t frame_count(std::size_t n_samples, int sample_rate, const MfscConfig& c) {
  const auto len = static_cast<std::size_t>(frame_length(sample_rate, c));
  if (n_samples < len)
    throw ShapeError("waveform has " + std::to_string(n_samples) + " samples; at least " + std::to_string(len) +
                     " (one " + std::to_string(c.frame_len_s * 1000.0) + " ms frame) are required");
  return 1 + (n_samples - len) / static_cast<std::size_t>(frame_stride(sample_rate, c));
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int fft, int sample_rate)
    : n_mels_(n_mels), n_bins_(fft / 2 + 1) {
  if (n_mels < 1 || fft < 2 || sample_rate <= 0) throw ShapeError("MelFilterbank: bad arguments");
  const double top = hz_to_mel(sample_rate / 2.0);
  edges_.resize(static_cast<std::size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges_[static_cast<std::size_t>(i)] = mel_to_hz(top * i / (n_mels + 1));
  w_.assign(static_cast<std::size_t>(n_mels) * static_cast<std::size_t>(n_bins_), 0.0);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = lower_hz(m), mid = center_hz(m), hi = upper_hz(m);
    for (int k = 0; k < n_bins_; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft;
      double v = 0.0;
      if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) v = (hi - f) / (hi - mid);
      w_[static_cast<std::size_t>(m * n_bins_ + k)] = v;
    }
  }
}

void MelFilterbank::apply(std::span<const double> power, std::span<double> out) const {
  for (int m = 0; m < n_mels_; ++m) {
    const double* row = &w_[static_cast<std::size_t>(m * n_bins_)];
    double acc = 0.0;
    for (int k = 0; k < n_bins_; ++k) acc += row[k] * power[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(m)] = acc;
  }
}

namespace {

struct FftwPlan {
  double* in;
  fftw_complex* out;
  fftw_plan plan;
  explicit FftwPlan(int n) {
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

FeatureMatrix mfsc(std::span<const float> waveform, int sample_rate, const MfscConfig& config) {
  const std::size_t frames = frame_count(waveform.size(), sample_rate, config);
  const int len = frame_length(sample_rate, config);
  const int stride = frame_stride(sample_rate, config);
  const int nfft = fft_size(sample_rate, config);
  const MelFilterbank bank(config.n_mels, nfft, sample_rate);

  std::vector<double> window(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i)
    window[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));

  FftwPlan fft(nfft);
  std::vector<double> power(static_cast<std::size_t>(nfft / 2 + 1));
  std::vector<double> mel(static_cast<std::size_t>(config.n_mels));
  FeatureMatrix m{frames, static_cast<std::size_t>(config.n_mels), {}};
  m.data.resize(frames * m.dims);

  for (std::size_t t = 0; t < frames; ++t) {
    const float* x = waveform.data() + t * static_cast<std::size_t>(stride);
    for (int i = 0; i < nfft; ++i) fft.in[i] = i < len ? x[i] * window[static_cast<std::size_t>(i)] : 0.0;
    fftw_execute(fft.plan);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = fft.out[k][0] * fft.out[k][0] + fft.out[k][1] * fft.out[k][1];
    bank.apply(power, mel);
    for (std::size_t d = 0; d < m.dims; ++d) m.at(t, d) = static_cast<float>(std::log(std::max(mel[d], config.log_floor)));
  }
  return m;
}

NormStats fit_normalizer(std::span<const FeatureMatrix> training) {
  if (training.empty()) throw ShapeError("fit_normalizer: no training matrices");
  const std::size_t dims = training.front().dims;
  std::size_t n = 0;
  std::vector<double> sum(dims, 0.0);
  for (const auto& m : training) {
    if (m.dims != dims) throw ShapeError("fit_normalizer: inconsistent feature dims");
    for (std::size_t t = 0; t < m.frames; ++t)
      for (std::size_t d = 0; d < dims; ++d) sum[d] += m.at(t, d);
    n += m.frames;
  }
  if (n < 2) throw ShapeError("fit_normalizer: need at least 2 training frames");
  NormStats s{std::vector<double>(dims), std::vector<double>(dims, 0.0)};
  for (std::size_t d = 0; d < dims; ++d) s.mean[d] = sum[d] / static_cast<double>(n);
  for (const auto& m : training)
    for (std::size_t t = 0; t < m.frames; ++t)
      for (std::size_t d = 0; d < dims; ++d) {
        const double e = m.at(t, d) - s.mean[d];
        s.std[d] += e * e;
      }
  for (std::size_t d = 0; d < dims; ++d) s.std[d] = std::max(std::sqrt(s.std[d] / static_cast<double>(n)), kStdFloor);
  return s;
}

void apply_normalizer(const NormStats& stats, FeatureMatrix& m) {
  if (stats.mean.size() != m.dims) throw ShapeError("apply_normalizer: stats/feature dims differ");
  for (std::size_t t = 0; t < m.frames; ++t)
    for (std::size_t d = 0; d < m.dims; ++d)
      m.at(t, d) = static_cast<float>((m.at(t, d) - stats.mean[d]) / stats.std[d]);
}

FeatureMatrix normalized(const NormStats& stats, FeatureMatrix m) {
  apply_normalizer(stats, m);
  return m;
}

Json to_json(const NormStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

NormStats norm_stats_from_json(const Json& j) {
  NormStats s{j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
  if (s.mean.size() != s.std.size()) throw SchemaError("norm stats: mean/std length differ");
  return s;
}

void write_features(const std::filesystem::path& dir, const std::string& clip_id, const FeatureMatrix& m,
                    bool is_normalized) {
  std::filesystem::create_directories(dir);
  const auto bin = dir / (clip_id + ".f32");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error("cannot write " + bin.string());
  out.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  write_json(dir / (clip_id + ".json"),
             {{"clip_id", clip_id}, {"T", m.frames}, {"dims", m.dims}, {"normalized", is_normalized}});
}

FeatureMatrix read_features(const std::filesystem::path& dir, const std::string& clip_id) {
  const Json side = read_json(dir / (clip_id + ".json"));
  FeatureMatrix m{side.at("T").get<std::size_t>(), side.at("dims").get<std::size_t>(), {}};
  m.data.resize(m.frames * m.dims);
  const auto bin = dir / (clip_id + ".f32");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw LoadError("cannot open " + bin.string());
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(m.data.size() * sizeof(float)))
    throw LoadError(bin.string() + ": truncated feature file");
  return m;
}

}  // namespace daqa::features
