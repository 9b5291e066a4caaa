#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "daqa/common/error.hpp"
#include "daqa/common/rng.hpp"
#include "daqa/features/mfsc.hpp"
#include "test_util.hpp"

namespace daqa::features {
namespace {

// Independent front end: direct DFT, own mel filters, double precision.
std::vector<std::vector<double>> reference_mfsc(const std::vector<float>& x, int sr, int n_mels) {
  const int len = int(std::lround(0.025 * sr));
  const int hop = int(std::lround(0.010 * sr));
  int nfft = 1;
  while (nfft < len) nfft *= 2;
  auto mel = [](double f) { return 1127.0 * std::log(1.0 + f / 700.0); };  // == 2595 log10(1 + f/700)
  auto inv = [](double m) { return 700.0 * (std::exp(m / 1127.0) - 1.0); };
  std::vector<double> pts(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) pts[i] = inv(mel(sr / 2.0) * i / (n_mels + 1));
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start + len <= x.size(); start += hop) {
    std::vector<double> p(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) {
      double re = 0, im = 0;
      for (int n = 0; n < len; ++n) {
        const double w = 0.54 - 0.46 * std::cos(2 * std::numbers::pi * n / (len - 1));
        const double ang = 2 * std::numbers::pi * double(k) * n / nfft;
        re += w * x[start + n] * std::cos(ang);
        im -= w * x[start + n] * std::sin(ang);
      }
      p[k] = re * re + im * im;
    }
    std::vector<double> row(n_mels);
    for (int m = 0; m < n_mels; ++m) {
      double e = 0;
      for (int k = 0; k <= nfft / 2; ++k) {
        const double f = double(k) * sr / nfft;
        double w = 0;
        if (f > pts[m] && f <= pts[m + 1]) w = (f - pts[m]) / (pts[m + 1] - pts[m]);
        if (f > pts[m + 1] && f < pts[m + 2]) w = (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1]);
        e += w * p[k];
      }
      row[m] = std::log(std::max(e, 1e-10));
    }
    out.push_back(row);
  }
  return out;
}

TEST(Mfsc, FrameCountFormula) {
  EXPECT_EQ(frame_count(16000, 16000), 98u);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 400 + uniform_index(rng, 200000);
    EXPECT_EQ(frame_count(n, 16000), 1 + (n - 400) / 160) << n;
  }
  EXPECT_THROW(frame_count(399, 16000), ShapeError);
  std::vector<float> short_wave(300, 0.1f);
  try {
    mfsc(short_wave, 16000);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("400"), std::string::npos);
  }
}

TEST(Mfsc, ZeroSignalHitsFloor) {
  const std::vector<float> z(16000, 0.0f);
  const auto m = mfsc(z, 16000);
  ASSERT_EQ(m.frames, 98u);
  ASSERT_EQ(m.dims, 64u);
  for (float v : m.data) EXPECT_EQ(v, float(std::log(1e-10)));
}

TEST(Mfsc, MatchesDirectDftReference) {
  Rng rng(3);
  std::vector<float> x(16000 / 10);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = float(0.3 * std::sin(2 * std::numbers::pi * 440.0 * i / 16000.0) + 0.05 * standard_normal(rng));
  const auto m = mfsc(x, 16000);
  const auto r = reference_mfsc(x, 16000, 64);
  ASSERT_EQ(m.frames, r.size());
  double worst = 0;
  for (std::size_t t = 0; t < m.frames; ++t)
    for (std::size_t d = 0; d < 64; ++d) worst = std::max(worst, std::abs(m.at(t, d) - r[t][d]));
  EXPECT_LT(worst, 1e-4);
}

TEST(Mfsc, SineAtCentreWinsItsFilter) {
  const MelFilterbank bank(64, 512, 16000);
  for (int f : {10, 20, 30, 40, 50, 60}) {
    std::vector<float> x(8000);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = float(0.5 * std::sin(2 * std::numbers::pi * bank.center_hz(f) * i / 16000.0));
    const auto m = mfsc(x, 16000);
    for (std::size_t t = 1; t + 1 < m.frames; ++t) {
      std::size_t arg = 0;
      for (std::size_t d = 1; d < m.dims; ++d)
        if (m.at(t, d) > m.at(t, arg)) arg = d;
      ASSERT_EQ(int(arg), f) << "frame " << t;
    }
  }
}

TEST(Mfsc, FilterbankGeometry) {
  const MelFilterbank bank(64, 512, 16000);
  EXPECT_NEAR(bank.lower_hz(0), 0.0, 1e-9);
  EXPECT_NEAR(bank.upper_hz(63), 8000.0, 1e-6);
  for (int m = 0; m < 64; ++m) {
    double sum = 0;
    for (int k = 0; k < bank.n_bins(); ++k) {
      EXPECT_GE(bank.weight(m, k), 0.0);
      EXPECT_LE(bank.weight(m, k), 1.0);
      sum += bank.weight(m, k);
    }
    EXPECT_GT(sum, 0.0) << m;
    if (m + 1 < 64) {
      EXPECT_LT(bank.lower_hz(m + 1), bank.upper_hz(m));  // neighbours overlap
      EXPECT_DOUBLE_EQ(bank.center_hz(m), bank.lower_hz(m + 1));
    }
  }
  for (double hz : {0.0, 100.0, 1000.0, 7999.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-12);
}

TEST(Mfsc, Deterministic) {
  Rng rng(5);
  std::vector<float> x(5000);
  for (auto& v : x) v = float(0.2 * standard_normal(rng));
  EXPECT_EQ(mfsc(x, 16000).data, mfsc(x, 16000).data);
}

std::vector<FeatureMatrix> random_matrices(std::uint64_t seed, int count) {
  Rng rng(seed);
  std::vector<FeatureMatrix> out;
  for (int i = 0; i < count; ++i) {
    FeatureMatrix m{100 + uniform_index(rng, 200), 64, {}};
    m.data.resize(m.frames * m.dims);
    for (std::size_t t = 0; t < m.frames; ++t)
      for (std::size_t d = 0; d < 64; ++d) m.at(t, d) = float(-10.0 + 0.1 * double(d) + (1.0 + 0.05 * double(d)) * standard_normal(rng));
    out.push_back(std::move(m));
  }
  return out;
}

TEST(Normalizer, TrainingColumnsAreStandardized) {
  auto train = random_matrices(1, 12);
  const auto stats = fit_normalizer(train);
  for (auto& m : train) apply_normalizer(stats, m);
  for (std::size_t d = 0; d < 64; ++d) {
    double s = 0, s2 = 0;
    std::size_t n = 0;
    for (const auto& m : train)
      for (std::size_t t = 0; t < m.frames; ++t) {
        s += m.at(t, d);
        s2 += double(m.at(t, d)) * m.at(t, d);
        ++n;
      }
    const double mean = s / double(n);
    EXPECT_LE(std::abs(mean), 1e-5);
    EXPECT_NEAR(std::sqrt(s2 / double(n) - mean * mean), 1.0, 1e-4);
  }
}

TEST(Normalizer, ShiftAndConstantColumns) {
  auto train = random_matrices(2, 4);
  for (auto& m : train)
    for (std::size_t t = 0; t < m.frames; ++t) m.at(t, 5) = 3.0f;
  const auto stats = fit_normalizer(train);
  EXPECT_EQ(stats.std[5], kStdFloor);
  const float c = 2.5f;
  for (const auto& m0 : train) {
    auto shifted = m0;
    for (auto& v : shifted.data) v += c;
    const auto n = normalized(stats, shifted);
    const auto base = normalized(stats, m0);
    for (std::size_t t = 0; t < n.frames; ++t) {
      EXPECT_EQ(base.at(t, 5), 0.0f);
      EXPECT_NEAR(n.at(t, 7) - base.at(t, 7), c / stats.std[7], 1e-4);
    }
  }
  const auto back = norm_stats_from_json(to_json(stats));
  EXPECT_EQ(back.mean, stats.mean);
  EXPECT_EQ(back.std, stats.std);
}

TEST(Normalizer, NeedsTwoFrames) {
  FeatureMatrix one{1, 64, std::vector<float>(64, 0.0f)};
  std::vector<FeatureMatrix> v{one};
  EXPECT_THROW(fit_normalizer(v), ShapeError);
}

TEST(FeatureFiles, RoundTripWithSidecar) {
  test::TempDir dir("features");
  auto m = random_matrices(3, 1).front();
  write_features(dir.path(), "clip_7", m, true);
  const auto back = read_features(dir.path(), "clip_7");
  EXPECT_EQ(back.frames, m.frames);
  EXPECT_EQ(back.dims, 64u);
  EXPECT_EQ(back.data, m.data);
  const auto side = read_json(dir.path() / "clip_7.json");
  EXPECT_EQ(side["clip_id"], "clip_7");
  EXPECT_EQ(side["T"], m.frames);
  EXPECT_EQ(side["dims"], 64);
  EXPECT_EQ(side["normalized"], true);
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "clip_7.f32"), m.data.size() * 4);
}

}  // namespace
}  // namespace daqa::features
