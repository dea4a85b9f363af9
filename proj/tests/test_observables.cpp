#include "rotors/observables.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace rotors;

namespace {

std::vector<double> normals(std::size_t n, double mean, double sd, std::uint64_t seed) {
  NormalStream g(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = mean + sd * g();
  return out;
}

Histogram filled(const std::vector<double>& xs, double lo, double hi, std::size_t bins) {
  Histogram h(lo, hi, bins);
  for (double x : xs) h.record(x);
  return h;
}

}  // namespace

TEST(Histogram, SingleSampleDensity) {
  Histogram h(0, 1, 10);
  h.record(0.35);
  auto d = h.density();
  EXPECT_DOUBLE_EQ(d[3], 1.0 / h.bin_width());
  EXPECT_DOUBLE_EQ(std::accumulate(d.begin(), d.end(), 0.0) - d[3], 0.0);
}

TEST(Histogram, MassIsConserved) {
  auto xs = normals(10000, 0, 1, 1);
  Histogram h = filled(xs, -1, 1, 50);
  double in = std::accumulate(h.counts().begin(), h.counts().end(), 0.0);
  EXPECT_EQ(in + h.underflow() + h.overflow(), h.total());
  EXPECT_EQ(h.total(), 10000.0);
  auto d = h.density();
  EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0) * h.bin_width(), in / h.total(), 1e-12);
}

TEST(Histogram, UniformIsFlat) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  Histogram h(0, 1, 20);
  const int n = 200000;
  for (int i = 0; i < n; ++i) h.record(u(rng));
  const double expected = n / 20.0;
  for (double c : h.counts()) EXPECT_LT(std::abs(c - expected), 5 * std::sqrt(expected));
}

TEST(Histogram, MergeAddsTallies) {
  auto xs = normals(1000, 0, 1, 3), ys = normals(1000, 0, 1, 4);
  Histogram a = filled(xs, -3, 3, 30), b = filled(ys, -3, 3, 30);
  std::vector<double> all = xs;
  all.insert(all.end(), ys.begin(), ys.end());
  a.merge(b);
  EXPECT_EQ(a.counts(), filled(all, -3, 3, 30).counts());
  EXPECT_THROW(a.merge(Histogram(-3, 3, 31)), PreconditionError);
}

TEST(Histogram, CsvHasHeader) {
  std::ostringstream os;
  filled({0.5}, 0, 1, 2).write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "bin_lo,bin_hi,density");
}

TEST(Statistics, KsOfGaussianDraws) {
  EXPECT_LT(ks_normal(normals(1000000, 0, 1, 5)), 0.01);
  EXPECT_GT(ks_normal(normals(10000, 0.2, 1, 6)), 0.05);
  EXPECT_LT(ks_best_fit_normal(normals(100000, 3, 2, 7)), 0.01);
}

TEST(Statistics, KsExactSmallCase) {
  // one sample at the median: sup |F_n - F| = 1/2
  EXPECT_DOUBLE_EQ(ks_normal({0.0}), 0.5);
}

TEST(Statistics, BatchMeansAndKurtosis) {
  auto xs = normals(100000, 1.5, 2, 8);
  BatchEstimate b = batch_means(xs, 20);
  EXPECT_LT(std::abs(b.mean - 1.5), 4 * b.std_error);
  EXPECT_NEAR(b.std_error, 2 / std::sqrt(100000.0), 0.5 * 2 / std::sqrt(100000.0));
  KurtosisEstimate k = excess_kurtosis(xs, 20);
  EXPECT_LT(std::abs(k.excess), 4 * k.std_error);
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> heavy(100000);
  for (auto& v : heavy) v = e(rng);
  EXPECT_NEAR(excess_kurtosis(heavy, 20).excess, 6.0, 1.0);
}

TEST(Flux, EquilibriumSeriesHasZeroFlux) {
  ChainParams p = ChainParams::benchmark(2, 2);
  auto a = normals(20000, 0, std::sqrt(2.0), 10), b = normals(20000, 0, std::sqrt(2.0), 11);
  std::vector<State> series(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    series[i].p[0] = a[i];
    series[i].p[2] = b[i];
  }
  FluxStats f = heat_flux(series, p);
  EXPECT_LT(std::abs(f.J1), 4 * f.stderr1);
  EXPECT_LT(std::abs(f.J3), 4 * f.stderr3);
  EXPECT_EQ(f.n_samples, 20000u);
}

TEST(Flux, TorqueTerm) {
  ChainParams p = ChainParams::benchmark(1, 1, 3);
  std::vector<State> series(40);
  for (auto& x : series) x.p << 1, 0, 2;
  FluxStats f = heat_flux(series, p);
  EXPECT_DOUBLE_EQ(f.J1, 0.0);
  EXPECT_DOUBLE_EQ(f.J3, 1.0 - 4.0 + 6.0);
}

TEST(Modes, UnimodalAndMixture) {
  auto g = normals(200000, 0, 1, 12);
  auto modes = find_modes(filled(g, -6, 6, 400));
  ASSERT_EQ(modes.size(), 1u);
  EXPECT_NEAR(modes[0].location, 0.0, 0.15);

  auto mix = normals(100000, 0, 1, 13), other = normals(100000, 20, 1, 14);
  mix.insert(mix.end(), other.begin(), other.end());
  auto two = find_modes(filled(mix, -5, 25, 400));
  ASSERT_EQ(two.size(), 2u);
  double lo = std::min(two[0].location, two[1].location), hi = std::max(two[0].location, two[1].location);
  EXPECT_NEAR(lo, 0.0, 0.2);
  EXPECT_NEAR(hi, 20.0, 0.2);
  EXPECT_GE(two[0].height, two[1].height);
}

TEST(Modes, MirrorEquivariance) {
  auto mix = normals(60000, -2, 1, 15), other = normals(30000, 5, 1.5, 16);
  mix.insert(mix.end(), other.begin(), other.end());
  std::vector<double> mirrored;
  for (double v : mix) mirrored.push_back(-v);
  auto a = find_modes(filled(mix, -10, 10, 200));
  auto b = find_modes(filled(mirrored, -10, 10, 200));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].location, -b[i].location, 1e-9);
    EXPECT_NEAR(a[i].height, b[i].height, 1e-9 * a[i].height);
  }
}

TEST(Dwell, ConstantSeriesIsOneCensoredDwell) {
  std::vector<double> flat(100, 0.0);
  DwellStats s = dwell_times(flat, 0.5, {0, 20, 0.2});
  EXPECT_TRUE(s.single_censored_dwell());
  EXPECT_EQ(s.n_low + s.n_high, 0u);
  EXPECT_DOUBLE_EQ(s.censored_time, 49.5);
}

TEST(Dwell, SquareWave) {
  // low for 30 steps, high for 10 steps, repeated; with noise inside the band
  std::vector<double> xs;
  for (int cycle = 0; cycle < 50; ++cycle) {
    for (int i = 0; i < 30; ++i) xs.push_back(i == 15 ? 9.5 : 0.0);
    for (int i = 0; i < 10; ++i) xs.push_back(i == 5 ? 10.5 : 20.0);
  }
  DwellStats s = dwell_times(xs, 1.0, {0, 20, 0.2});
  EXPECT_EQ(s.switches, 99u);
  EXPECT_DOUBLE_EQ(s.mean_low, 30.0);
  EXPECT_DOUBLE_EQ(s.mean_high, 10.0);
  EXPECT_DOUBLE_EQ(s.se_low, 0.0);
  EXPECT_DOUBLE_EQ(s.se_high, 0.0);
  EXPECT_THROW(dwell_times(xs, 1.0, {20, 0, 0.2}), PreconditionError);
}

TEST(Dwell, StandardErrors) {
  // low sojourns alternate 10 and 30, high ones are always 5
  std::vector<double> xs;
  for (int cycle = 0; cycle < 41; ++cycle) {
    xs.insert(xs.end(), cycle % 2 ? 30 : 10, 0.0);
    xs.insert(xs.end(), 5, 20.0);
  }
  DwellStats s = dwell_times(xs, 1.0, {0, 20, 0.2});
  // the first low sojourn is censored: 40 complete low sojourns, 20 of each length
  ASSERT_EQ(s.n_low, 40u);
  EXPECT_DOUBLE_EQ(s.mean_low, 20.0);
  EXPECT_NEAR(s.se_low, std::sqrt(100.0 * 40 / 39 / 40), 1e-12);
  EXPECT_DOUBLE_EQ(s.se_high, 0.0);
}

TEST(Drift, NoDriftFromRest) {
  DriftScanSpec spec;
  spec.omegas = {0};
  spec.windows = {10};
  spec.n_paths = 300;
  auto est = conditional_drift(ChainParams::benchmark(1, 1), spec, RngSpec{4});
  ASSERT_EQ(est.size(), 1u);
  EXPECT_LT(std::abs(est[0].mean_slope), 4 * est[0].std_error);
  EXPECT_GT(est[0].std_error, 0.0);
}

TEST(Drift, RegimeViolation) {
  DriftScanSpec spec;
  spec.omegas = {1};
  spec.windows = {50};
  spec.n_paths = 20;
  EXPECT_THROW(conditional_drift(ChainParams::benchmark(1, 1), spec, RngSpec{4}), RegimeViolation);
}

TEST(Drift, ExponentOfExactPowerLaw) {
  std::vector<DriftEstimate> est;
  for (double w : {10.0, 20.0, 40.0}) {
    DriftEstimate e;
    e.omega = w;
    e.mean_slope = -2.0 / (w * w * w);
    est.push_back(e);
  }
  EXPECT_NEAR(drift_exponent(est), -3.0, 1e-12);
}
