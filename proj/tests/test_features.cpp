#include <gtest/gtest.h>

#include <numeric>

#include "neuroid/error.hpp"
#include "neuroid/features.hpp"
#include "support.hpp"

using namespace neuroid;
namespace ts = testing_support;

namespace {

EpochSet make_epochs(std::size_t n_epochs, std::size_t n_channels, std::size_t n_times, double rate,
                     std::uint64_t seed) {
  EpochSet e;
  e.n_epochs = n_epochs;
  e.n_channels = n_channels;
  e.n_times = n_times;
  e.sampling_rate_hz = rate;
  e.tmin_s = e.first_time_s = 0.0;
  e.tmax_s = static_cast<double>(n_times - 1) / rate;
  e.data.resize(n_epochs * n_channels * n_times);
  auto rng = make_rng(seed, {fnv1a("epochs")});
  for (std::size_t i = 0; i < n_epochs; ++i) {
    e.subject_ids.push_back("s" + std::to_string(i % 3));
    e.session_ids.push_back("S1");
    for (std::size_t c = 0; c < n_channels; ++c) {
      // AR(1) with a per-channel pole plus a channel-specific tone.
      double prev = 0.0;
      const double a = 0.2 + 0.1 * static_cast<double>(c);
      for (std::size_t t = 0; t < n_times; ++t) {
        prev = a * prev + standard_normal(rng);
        e.data[(i * n_channels + c) * n_times + t] =
            prev + 2.0 * std::sin(2.0 * std::numbers::pi * (5.0 + 4.0 * c) * t / rate);
      }
    }
  }
  e.session_order = {"S1"};
  for (std::size_t c = 0; c < n_channels; ++c) e.channel_names.push_back("C" + std::to_string(c));
  return e;
}

// Welch by direct DFT summation, following the documented estimator.
std::vector<double> oracle_welch(const std::vector<double>& x, double rate, int n_windows, double overlap) {
  const auto L = static_cast<std::size_t>(
      std::floor(static_cast<double>(x.size()) / (1.0 + (n_windows - 1) * (1.0 - overlap)) + 1e-9));
  const auto step = L - static_cast<std::size_t>(std::floor(static_cast<double>(L) * overlap));
  std::vector<double> w(L);
  double sumsq = 0.0;
  for (std::size_t t = 0; t < L; ++t) {
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(L));
    sumsq += w[t] * w[t];
  }
  const std::size_t bins = L / 2 + 1;
  std::vector<double> psd(bins, 0.0);
  for (int k = 0; k < n_windows; ++k) {
    std::vector<double> seg(x.begin() + static_cast<std::ptrdiff_t>(k * step),
                            x.begin() + static_cast<std::ptrdiff_t>(k * step + L));
    const double m = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(L);
    for (std::size_t t = 0; t < L; ++t) seg[t] = (seg[t] - m) * w[t];
    for (std::size_t b = 0; b < bins; ++b)
      psd[b] += ts::direct_power(seg, static_cast<double>(b) * rate / static_cast<double>(L), rate);
  }
  for (std::size_t b = 0; b < bins; ++b) {
    psd[b] /= rate * sumsq * n_windows;
    const bool nyquist = L % 2 == 0 && b == bins - 1;
    if (b != 0 && !nyquist) psd[b] *= 2.0;
  }
  return psd;
}

}  // namespace

TEST(Autoregressive, RecoversKnownAr1AndAr2) {
  const auto x1 = ts::simulate_ar({0.5}, 10000, 11);
  EXPECT_NEAR(ar_coefficients(x1, 1)[0], 0.5, 0.05);
  const auto x2 = ts::simulate_ar({0.6, -0.3}, 10000, 12);
  const auto a = ar_coefficients(x2, 2);
  EXPECT_NEAR(a[0], 0.6, 0.05);
  EXPECT_NEAR(a[1], -0.3, 0.05);
}

TEST(Autoregressive, WhiteNoiseHasNoMemory) {
  EXPECT_NEAR(ar_coefficients(ts::white_noise(10000, 5), 1)[0], 0.0, 0.05);
}

TEST(Autoregressive, LevinsonMatchesDenseSolve) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = ts::simulate_ar({0.4, 0.2, -0.1}, 600, seed);
    for (int p = 1; p <= 6; ++p) {
      const auto r = autocovariance(x, p);
      const auto lev = levinson_durbin(r, p);
      const auto dense = ts::dense_yule_walker(r, p);
      ASSERT_EQ(lev.size(), static_cast<std::size_t>(p));
      for (int k = 0; k < p; ++k) EXPECT_NEAR(lev[static_cast<std::size_t>(k)], dense(k), 1e-8);
      EXPECT_EQ(ar_coefficients(x, p), lev);
    }
  }
}

TEST(Autoregressive, AutocovarianceIsBiasedAndMeanRemoved) {
  const std::vector<double> x{1.0, 3.0, 2.0, 6.0};
  const double m = 3.0;
  const auto r = autocovariance(x, 2);
  EXPECT_NEAR(r[0], ((1 - m) * (1 - m) + 0 + 1 + 9) / 4.0, 1e-12);
  EXPECT_NEAR(r[1], ((1 - m) * (3 - m) + (3 - m) * (2 - m) + (2 - m) * (6 - m)) / 4.0, 1e-12);
  EXPECT_NEAR(r[2], ((1 - m) * (2 - m) + (3 - m) * (6 - m)) / 4.0, 1e-12);
}

TEST(Autoregressive, FirstOrderCoefficientIsStable) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto rng = make_rng(seed, {});
    std::vector<double> x(40);
    for (auto& v : x) v = standard_normal(rng) + 5.0 * uniform01(rng);
    const double a = ar_coefficients(x, 1)[0];
    EXPECT_GT(a, -1.0);
    EXPECT_LT(a, 1.0);
  }
}

TEST(Autoregressive, ZeroVarianceIsDegenerate) {
  const std::vector<double> flat(100, 3.25);
  EXPECT_THROW(ar_coefficients(flat, 1), DegenerateError);
  EXPECT_THROW(ar_coefficients(std::vector<double>{1.0}, 1), ParamError);
}

TEST(Welch, ParsevalOnWhiteNoise) {
  const double rate = 256.0;
  const auto x = ts::white_noise(4096, 3, 2.0);
  const auto s = welch_psd(x, rate);
  const double df = s.frequencies[1] - s.frequencies[0];
  double total = 0.0;
  for (double p : s.psd) total += p * df;
  EXPECT_NEAR(total, ts::variance(x), 0.1 * ts::variance(x));
}

TEST(Welch, MatchesDirectSummation) {
  for (std::size_t n : {256u, 300u, 511u}) {
    const auto x = ts::white_noise(n, n);
    for (auto [nw, ov] : {std::pair{4, 0.5}, std::pair{3, 0.25}, std::pair{1, 0.0}}) {
      const auto s = welch_psd(x, 128.0, nw, ov);
      const auto o = oracle_welch(x, 128.0, nw, ov);
      ASSERT_EQ(s.psd.size(), o.size());
      for (std::size_t k = 0; k < o.size(); ++k)
        EXPECT_NEAR(s.psd[k], o[k], 1e-9 * (1.0 + o[k])) << n << " bin " << k;
    }
  }
}

TEST(Welch, SegmentLengthFormula) {
  // Four windows at 50% overlap: L = floor(2N/5).
  for (std::size_t n : {256u, 257u, 1000u, 1024u}) {
    const auto s = welch_psd(ts::white_noise(n, 1), 256.0);
    const std::size_t L = 2 * n / 5;
    EXPECT_EQ(s.psd.size(), L / 2 + 1) << n;
    EXPECT_NEAR(s.frequencies[1], 256.0 / static_cast<double>(L), 1e-12);
  }
}

TEST(Welch, PeakSitsAtTheToneFrequency) {
  const auto x = ts::sinusoid(1024, 11.0, 256.0);
  const auto s = welch_psd(x, 256.0);
  const auto peak = std::max_element(s.psd.begin(), s.psd.end()) - s.psd.begin();
  const double df = s.frequencies[1];
  EXPECT_LE(std::abs(s.frequencies[static_cast<std::size_t>(peak)] - 11.0), df);
}

TEST(Welch, ZeroAndNonNegative) {
  const auto z = welch_psd(std::vector<double>(512, 0.0), 256.0);
  for (double p : z.psd) EXPECT_EQ(p, 0.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    for (double p : welch_psd(ts::white_noise(300, seed), 100.0).psd) EXPECT_GE(p, 0.0);
}

TEST(Welch, RejectsShortInputAndBadParameters) {
  EXPECT_THROW(welch_psd(std::vector<double>(6, 1.0), 256.0), ParamError);
  EXPECT_THROW(welch_psd(ts::white_noise(256, 1), 256.0, 0), ParamError);
  EXPECT_THROW(welch_psd(ts::white_noise(256, 1), 256.0, 4, 1.0), ParamError);
  EXPECT_THROW(welch_psd(ts::white_noise(256, 1), 0.0), ParamError);
}

TEST(BandPower, AlphaToneDominatesAlphaBand) {
  const auto x = ts::sinusoid(256, 11.0, 256.0);
  const auto s = welch_psd(x, 256.0);
  const auto bp = band_power(s.frequencies, s.psd, default_bands());
  ASSERT_EQ(bp.size(), 4u);
  EXPECT_GT(bp[1], 10.0 * bp[0]);
  EXPECT_GT(bp[1], 10.0 * bp[2]);
  EXPECT_GT(bp[1], 10.0 * bp[3]);
}

TEST(BandPower, FlatSpectrumGivesItsLevel) {
  std::vector<double> f, p;
  for (int k = 0; k <= 64; ++k) {
    f.push_back(k * 1.0);
    p.push_back(2.5);
  }
  for (double v : band_power(f, p, default_bands())) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(BandPower, MatchesBruteForceMean) {
  auto rng = make_rng(8, {});
  std::vector<double> f, p;
  for (int k = 0; k < 100; ++k) {
    f.push_back(k * 0.625);
    p.push_back(uniform01(rng));
  }
  const std::vector<Band> bands{{"a", 0.0, 3.0}, {"b", 3.0, 7.5}, {"c", 7.5, 40.0}};
  const auto bp = band_power(f, p, bands);
  for (std::size_t b = 0; b < bands.size(); ++b) {
    double acc = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < f.size(); ++k)
      if (f[k] >= bands[b].low_hz && f[k] < bands[b].high_hz) {
        acc += p[k];
        ++n;
      }
    EXPECT_NEAR(bp[b], acc / n, 1e-12);
  }
}

TEST(BandPower, EmptyBandIsRejected) {
  std::vector<double> f{0.0, 4.0, 8.0, 12.0}, p{1, 1, 1, 1};
  EXPECT_THROW(band_power(f, p, {{"narrow", 5.0, 6.0}}), ParamError);
}

TEST(BandPower, ConstantOffsetDoesNotMoveBandsAboveOneHertz) {
  const auto x = ts::white_noise(256, 4);
  auto shifted = x;
  for (auto& v : shifted) v += 40.0;
  const auto a = welch_psd(x, 256.0), b = welch_psd(shifted, 256.0);
  const auto pa = band_power(a.frequencies, a.psd, default_bands());
  const auto pb = band_power(b.frequencies, b.psd, default_bands());
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_NEAR(pa[k], pb[k], 1e-9 * pa[k]);
}

TEST(Assemble, EightChannelsGiveFortyFeatures) {
  const auto e = make_epochs(5, 8, 256, 256.0, 1);
  const auto fm = assemble(e, FeatureRecipe{});
  EXPECT_EQ(fm.values.rows(), 5);
  EXPECT_EQ(fm.values.cols(), 40);
  ASSERT_EQ(fm.feature_names.size(), 40u);
  EXPECT_EQ(fm.feature_names[0], "ch0_ar1");
  EXPECT_EQ(fm.feature_names[1], "ch0_psd_low");
  EXPECT_EQ(fm.feature_names[2], "ch0_psd_alpha");
  EXPECT_EQ(fm.feature_names[5], "ch1_ar1");
  EXPECT_EQ(fm.feature_names[39], "ch7_psd_gamma");
  EXPECT_EQ(fm.subject_ids, e.subject_ids);
}

TEST(Assemble, RowsComposeFromTheBuildingBlocks) {
  FeatureRecipe r;
  r.ar_order = 3;
  const auto e = make_epochs(4, 3, 300, 200.0, 2);
  const auto fm = assemble(e, r);
  const std::size_t span = 200;  // one second
  ASSERT_EQ(feature_span(e, r), span);
  for (std::size_t i = 0; i < e.n_epochs; ++i) {
    std::vector<double> expect;
    for (std::size_t c = 0; c < e.n_channels; ++c) {
      const std::span<const double> x(e.channel(i, c), span);
      for (double a : ar_coefficients(x, 3)) expect.push_back(a);
      const auto s = welch_psd(x, 200.0, r.psd_n_windows, r.psd_overlap);
      for (double b : band_power(s.frequencies, s.psd, r.bands)) expect.push_back(b);
    }
    ASSERT_EQ(static_cast<Eigen::Index>(expect.size()), fm.values.cols());
    for (std::size_t j = 0; j < expect.size(); ++j)
      EXPECT_NEAR(fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), expect[j],
                  1e-12 * (1.0 + std::abs(expect[j])));
  }
  r.full_epoch = true;
  EXPECT_EQ(feature_span(e, r), 300u);
}

TEST(Assemble, PermutingEpochsPermutesRows) {
  const auto e = make_epochs(6, 2, 256, 256.0, 3);
  const std::vector<std::size_t> perm{4, 0, 5, 2, 1, 3};
  const auto a = assemble(e, FeatureRecipe{});
  const auto b = assemble(e.select(perm), FeatureRecipe{});
  for (std::size_t i = 0; i < perm.size(); ++i) {
    EXPECT_EQ(b.values.row(static_cast<Eigen::Index>(i)), a.values.row(static_cast<Eigen::Index>(perm[i])));
    EXPECT_EQ(b.subject_ids[i], a.subject_ids[perm[i]]);
  }
}

TEST(Assemble, RecipeSwitches) {
  const auto e = make_epochs(2, 2, 256, 256.0, 4);
  FeatureRecipe ar_only;
  ar_only.use_psd = false;
  ar_only.ar_order = 2;
  EXPECT_EQ(assemble(e, ar_only).values.cols(), 4);
  FeatureRecipe none = ar_only;
  none.use_ar = false;
  EXPECT_THROW(assemble(e, none), ParamError);
  FeatureRecipe bad;
  bad.bands = {{"x", 10.0, 5.0}};
  EXPECT_THROW(validate(bad), ParamError);
  bad.bands = {{"a", 1.0, 10.0}, {"b", 8.0, 12.0}};
  EXPECT_THROW(validate(bad), ParamError);
}

TEST(Standardizer, TrainingColumnsBecomeZeroMeanUnitStd) {
  auto rng = make_rng(5, {});
  Eigen::MatrixXd m(50, 4);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = 10.0 * j + (j + 1) * standard_normal(rng);
  m.col(3).setConstant(7.0);
  const auto s = standardize_fit(m);
  const auto z = standardize_apply(s, m);
  for (Eigen::Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(z.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(z.col(j).array().square().mean()), 1.0, 1e-12);
  }
  for (Eigen::Index i = 0; i < z.rows(); ++i) EXPECT_EQ(z(i, 3), 0.0);
  // A row equal to the training mean maps to zero.
  const Eigen::MatrixXd mean_row = s.mean;
  EXPECT_LT(standardize_apply(s, mean_row).norm(), 1e-12);
}

TEST(Standardizer, UsesOnlyTrainingStatistics) {
  Eigen::MatrixXd train(4, 1), test(2, 1);
  train << 0.0, 2.0, 4.0, 6.0;
  test << 100.0, 3.0;
  const auto s = standardize_fit(train);
  const auto z = standardize_apply(s, test);
  const double sd = std::sqrt(5.0);
  EXPECT_NEAR(z(0, 0), 97.0 / sd, 1e-12);
  EXPECT_NEAR(z(1, 0), 0.0, 1e-12);
  // Fitting on the pooled data moves the statistics: the test rows matter.
  Eigen::MatrixXd pooled(6, 1);
  pooled << train, test;
  EXPECT_GT(std::abs(standardize_fit(pooled).mean(0) - s.mean(0)), 1.0);
  EXPECT_THROW(standardize_fit(Eigen::MatrixXd(0, 3)), EmptyError);
  EXPECT_THROW(standardize_apply(s, Eigen::MatrixXd(2, 2)), ValidationError);
}
