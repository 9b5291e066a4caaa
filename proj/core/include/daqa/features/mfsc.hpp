#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "daqa/common/io.hpp"

namespace daqa::features {

/// All front-end constants in one place.
struct MfscConfig {
  int n_mels = 64;
  double frame_len_s = 0.025;
  double frame_stride_s = 0.010;
  double log_floor = 1e-10;  // natural log of max(energy, floor)
};

int frame_length(int sample_rate, const MfscConfig& c = {});
int frame_stride(int sample_rate, const MfscConfig& c = {});
/// Smallest power of two >= frame length.
int fft_size(int sample_rate, const MfscConfig& c = {});
/// 1 + floor((n - frame_len) / stride); throws for n < frame_len.
std::size_t frame_count(std::size_t n_samples, int sample_rate, const MfscConfig& c = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular unit-peak filters over [0, sr/2], equally spaced on the mel scale.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int fft_size, int sample_rate);
  int n_mels() const { return n_mels_; }
  int n_bins() const { return n_bins_; }
  double weight(int filter, int bin) const { return w_[static_cast<std::size_t>(filter * n_bins_ + bin)]; }
  double center_hz(int filter) const { return edges_[static_cast<std::size_t>(filter) + 1]; }
  double lower_hz(int filter) const { return edges_[static_cast<std::size_t>(filter)]; }
  double upper_hz(int filter) const { return edges_[static_cast<std::size_t>(filter) + 2]; }
  /// out[m] = sum_k weight(m, k) * power[k]
  void apply(std::span<const double> power, std::span<double> out) const;

 private:
  int n_mels_, n_bins_;
  std::vector<double> edges_;
  std::vector<double> w_;
};

/// T x dims row-major coefficients.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dims = 0;
  std::vector<float> data;

  float& at(std::size_t t, std::size_t d) { return data[t * dims + d]; }
  float at(std::size_t t, std::size_t d) const { return data[t * dims + d]; }
};

/// Hamming-windowed power spectrum -> mel filterbank -> log, per frame.
FeatureMatrix mfsc(std::span<const float> waveform, int sample_rate, const MfscConfig& config = {});

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};
inline constexpr double kStdFloor = 1e-8;

/// Per-coefficient mean and population std over every frame of every matrix.
NormStats fit_normalizer(std::span<const FeatureMatrix> training);
void apply_normalizer(const NormStats& stats, FeatureMatrix& m);
FeatureMatrix normalized(const NormStats& stats, FeatureMatrix m);

Json to_json(const NormStats& s);
NormStats norm_stats_from_json(const Json& j);

/// <dir>/<clip_id>.f32 (little-endian float32, T x dims) and <dir>/<clip_id>.json
/// sidecar {clip_id, T, dims, normalized}.
void write_features(const std::filesystem::path& dir, const std::string& clip_id, const FeatureMatrix& m,
                    bool is_normalized);
FeatureMatrix read_features(const std::filesystem::path& dir, const std::string& clip_id);

}  // namespace daqa::features
