#include "daqa/events/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "daqa/common/error.hpp"

namespace daqa::events {
namespace fs = std::filesystem;

namespace {

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

struct Layout {
  int sample_rate = 0;
  std::size_t data_offset = 0;
  std::size_t data_bytes = 0;
};

Layout parse_header(std::ifstream& in, const fs::path& path) {
  auto fail = [&](const std::string& why) -> LoadError {
    return LoadError("unreadable WAV " + path.string() + ": " + why);
  };
  std::array<unsigned char, 12> riff{};
  if (!in.read(reinterpret_cast<char*>(riff.data()), 12)) throw fail("short header");
  if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0)
    throw fail("not RIFF/WAVE");
  Layout layout;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (true) {
    std::array<unsigned char, 8> ch{};
    if (!in.read(reinterpret_cast<char*>(ch.data()), 8)) throw fail("missing data chunk");
    pos += 8;
    const std::uint32_t size = le32(ch.data() + 4);
    if (std::memcmp(ch.data(), "fmt ", 4) == 0) {
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size) || size < 16) throw fail("bad fmt chunk");
      const auto format = le16(fmt.data());
      const auto channels = le16(fmt.data() + 2);
      const auto bits = le16(fmt.data() + 14);
      if (format != 1) throw fail("not PCM");
      if (channels != 1) throw fail("expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw fail("expected 16-bit samples, got " + std::to_string(bits));
      layout.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      have_fmt = true;
    } else if (std::memcmp(ch.data(), "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      layout.data_offset = pos;
      layout.data_bytes = size;
      return layout;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    pos += size + (size & 1);
  }
}

}  // namespace

std::pair<int, std::size_t> read_wav_info(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open WAV " + path.string());
  const Layout l = parse_header(in, path);
  return {l.sample_rate, l.data_bytes / 2};
}

WavData read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open WAV " + path.string());
  const Layout l = parse_header(in, path);
  std::vector<unsigned char> raw(l.data_bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw LoadError("unreadable WAV " + path.string() + ": truncated data");
  WavData wav;
  wav.sample_rate = l.sample_rate;
  wav.samples.resize(raw.size() / 2);
  for (std::size_t i = 0; i < wav.samples.size(); ++i) {
    const auto v = static_cast<std::int16_t>(le16(raw.data() + 2 * i));
    wav.samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return wav;
}

void write_wav(const fs::path& path, std::span<const float> samples, int sample_rate) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (float s : samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const auto q = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    put16(out, static_cast<std::uint16_t>(q));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw LoadError("cannot write WAV " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace daqa::events
