#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace daqa::events {

struct WavData {
  int sample_rate = 0;
  std::vector<float> samples;  // mono, [-1, 1]
};

/// Reads a mono 16-bit PCM RIFF/WAVE file. Throws LoadError on anything else.
WavData read_wav(const std::filesystem::path& path);

/// Reads only the header and returns (sample_rate, frame count).
std::pair<int, std::size_t> read_wav_info(const std::filesystem::path& path);

/// Writes mono 16-bit PCM; samples are clamped to [-1, 1] and rounded.
void write_wav(const std::filesystem::path& path, std::span<const float> samples, int sample_rate);

}  // namespace daqa::events
