#include "random_poly.hpp"

#include "rotors/lyapunov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rotors;
using rotors::testing::random_state;

namespace {

State at(double q1, double q2, double q3, double p1, double p2, double p3) {
  State x;
  x.q << q1, q2, q3;
  x.p << p1, p2, p3;
  return x;
}

struct Certificate : ::testing::Test {
  static void SetUpTestSuite() {
    params = new ChainParams(ChainParams::benchmark(1, 10));
    eff = new EffectiveDynamics(average_p2(*params));
    V = new LyapunovFunction(*params, LyapunovParams{}, *eff);
  }
  static void TearDownTestSuite() {
    delete V;
    delete eff;
    delete params;
  }
  static ChainParams* params;
  static EffectiveDynamics* eff;
  static LyapunovFunction* V;
};

ChainParams* Certificate::params = nullptr;
EffectiveDynamics* Certificate::eff = nullptr;
LyapunovFunction* Certificate::V = nullptr;

}  // namespace

TEST(Lyapunov, Regions) {
  LyapunovParams lyp;
  lyp.R = 10;
  RegionLabel origin = region(State{}, lyp);
  EXPECT_EQ(origin.region, Region::omega1);
  EXPECT_TRUE(origin.in_K);
  double r = 0.01 + 0.04;
  EXPECT_EQ(region(at(0, 0, 0, 0.1, 10 * std::pow(lyp.R + r, lyp.k), 0.2), lyp).region, Region::omega3);
  // |p2| = r^k + R exactly: closed lower boundary of omega2
  EXPECT_EQ(region(at(0, 0, 0, 1, 14, 1), lyp).region, Region::omega2);
  EXPECT_EQ(region(at(0, 0, 0, 1, -28, 1), lyp).region, Region::omega2);
  EXPECT_EQ(region(at(0, 0, 0, 1, 28.5, 1), lyp).region, Region::omega3);
  RegionLabel far = region(at(0, 0, 0, 40, 0, 40), lyp);
  EXPECT_EQ(far.region, Region::omega1);
  EXPECT_FALSE(far.in_K);
}

TEST(Lyapunov, CutoffIsC2) {
  EXPECT_EQ(cutoff(0.5).value, 0.0);
  EXPECT_EQ(cutoff(-1.0).value, 0.0);
  EXPECT_EQ(cutoff(2.0).value, 1.0);
  EXPECT_EQ(cutoff(-7.0).value, 1.0);
  for (double edge : {1.0, 2.0, -1.0, -2.0}) {
    Cutoff in = cutoff(edge * (1 - 1e-9)), out = cutoff(edge * (1 + 1e-9));
    EXPECT_NEAR(in.value, out.value, 1e-8);
    EXPECT_NEAR(in.d1, out.d1, 1e-6);
    EXPECT_NEAR(in.d2, out.d2, 1e-6);
  }
  const double h = 1e-5;
  for (double s : {1.1, 1.5, 1.9, -1.3}) {
    EXPECT_NEAR(cutoff(s).d1, (cutoff(s + h).value - cutoff(s - h).value) / (2 * h), 1e-8);
    EXPECT_NEAR(cutoff(s).d2, (cutoff(s + h).d1 - cutoff(s - h).d1) / (2 * h), 1e-7);
  }
  EXPECT_NEAR(cutoff(-1.5).value, cutoff(1.5).value, 1e-15);
}

TEST(Lyapunov, PhiIsIncreasingAndConcave) {
  const double c4 = 0.3;
  for (double s = 1.7; s < 1e6; s *= 1.7) {
    EXPECT_GT(phi_prime(s, c4), 0);
    EXPECT_LT(phi_second(s, c4), 0);
    const double h = 1e-6 * s;
    EXPECT_NEAR(phi_prime(s, c4), (phi(s + h, c4) - phi(s - h, c4)) / (2 * h), 1e-6 * phi_prime(s, c4));
  }
  EXPECT_DOUBLE_EQ(phi(1, c4), c4 / 2);
}

TEST(Lyapunov, HPhiInverseFormula) {
  for (double c4 : {1e-3, 0.2, 1.0}) {
    for (double t : {0.0, 0.5, 10.0, 1000.0}) {
      double u = h_phi_inverse(t, c4);
      EXPECT_NEAR(u, std::exp(std::sqrt(2 * c4 * t + 4) - 2), 1e-12 * u);
      // H_phi(u) = int_1^u ds / phi(s), Simpson's rule in log s
      const int n = 2000;
      double L = std::log(u), sum = 0;
      for (int i = 0; i <= n; ++i) {
        double y = L * i / n, s = std::exp(y);
        double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        sum += w * s / phi(s, c4);
      }
      EXPECT_NEAR(sum * L / (3 * n), t, 1e-8 * (1 + t));
    }
  }
}

TEST(Lyapunov, BetaAboveInverseTemperatureIsRejected) {
  LyapunovParams lyp;
  lyp.beta = 1;
  EXPECT_THROW(lyp.validate(ChainParams::benchmark(1, 10)), ConfigError);
  lyp.beta = 0.05;
  EXPECT_NO_THROW(lyp.validate(ChainParams::benchmark(1, 10)));
  lyp.k = 0;
  EXPECT_THROW(lyp.validate(ChainParams::benchmark(1, 10)), ConfigError);
}

TEST_F(Certificate, InnerRegionHasOnlyTheEnergyTerm) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    State x = random_state(rng, 5);
    ASSERT_EQ(region(x, V->lyp()).region, Region::omega1);
    EXPECT_DOUBLE_EQ(V->v_scaled(x), std::exp(-0.05 * hamiltonian(x, *params)) + 1);
    EXPECT_GE(V->log_v(x), 0.0);
    EXPECT_GE(V->log_v(x), 0.05 * hamiltonian(x, *params));
  }
}

TEST_F(Certificate, RestPointDrift) {
  State x;
  EXPECT_NEAR(V->lv_scaled(x), 0.05 * 1 + 0.05 * 10, 1e-15);
  EXPECT_GT(V->lv_scaled(x), 0);
}

TEST_F(Certificate, LexpClosedForm) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 100; ++i) {
    State x = random_state(rng, 10);
    double expected = 0;
    for (int b : {0, 2}) {
      double T = b == 0 ? 1 : 10, p = x.p[b];
      expected += -0.05 * (1 - 0.05 * T) * p * p + 0.05 * T;
    }
    EXPECT_NEAR(V->lexp_scaled(x), expected, 1e-12 * (1 + std::abs(expected)));
  }
}

TEST_F(Certificate, P2Tilde) {
  State x = at(0.3, 0.3 + std::numbers::pi / 2, 0.3, 1, 50, 2);
  EXPECT_NEAR(p2_tilde(x, *eff, -1), 50.0, 1e-12);
  State y = at(0.4, 1.9, 2.2, 0.5, 0, -0.5);
  const double Phi2 = -std::cos(1.9 - 0.4) - std::cos(1.9 - 2.2);
  for (double p2 : {1e2, 1e3, 1e4}) {
    y.p[1] = p2;
    EXPECT_NEAR((p2_tilde(y, *eff, std::nullopt) - p2) * p2, Phi2, 5.0 / p2);
  }
}

TEST_F(Certificate, ContinuousAcrossTheCutoff) {
  // LV is only Lipschitz at the edges and steep there: the gap must shrink like eps
  LyapunovParams lyp = V->lyp();
  for (double edge : {1.0, 2.0}) {
    State x = at(1.0, 2.0, 0.5, 1.0, 0, 0.5);
    double D = std::pow(1.25, lyp.k) + lyp.R;
    auto gap = [&](double eps, bool lv) {
      State a = x, b = x;
      a.p[1] = edge * D * (1 - eps);
      b.p[1] = edge * D * (1 + eps);
      return lv ? std::abs(V->lv_scaled(a) - V->lv_scaled(b)) : std::abs(V->v_scaled(a) - V->v_scaled(b));
    };
    for (bool lv : {false, true}) {
      double coarse = gap(1e-8, lv), fine = gap(1e-11, lv);
      EXPECT_LE(fine, 2e-3 * coarse + 1e-9) << "edge " << edge << (lv ? " LV" : " V");
    }
    State y = x;
    y.p[1] = edge * D;
    EXPECT_LT(gap(1e-12, false), 1e-8 * V->v_scaled(y));
  }
}

TEST_F(Certificate, FiniteDifferenceAgreement) { EXPECT_LT(V->fd_discrepancy(100, 5), 1e-4); }

TEST_F(Certificate, SmallScanAndSandwich) {
  DriftScanOptions opt;
  opt.n_points = 3000;
  opt.seed = 7;
  DriftScanReport rep = drift_scan(*V, opt);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.non_finite, 0u);
  EXPECT_LE(rep.worst_outside_K.value, 0.0);
  SandwichFit fit = fit_sandwich(*V, 3000, 8);
  EXPECT_GT(fit.c1, 0);
  EXPECT_EQ(sandwich_violations(*V, fit, 3000, 7), 0u);
  nlohmann::json j = to_json(rep, V->lyp());
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_TRUE(j.contains("margins_by_region"));
}

TEST_F(Certificate, ScanPointsAreDeterministicAndStratified) {
  LyapunovParams lyp = V->lyp();
  for (std::size_t i = 0; i < 60; ++i) {
    State a = scan_point(i, lyp, 3), b = scan_point(i, lyp, 3);
    EXPECT_EQ(a.p, b.p);
    EXPECT_EQ(a.q, b.q);
    if (i % n_strata == static_cast<std::size_t>(Stratum::omega3))
      EXPECT_EQ(region(a, lyp).region, Region::omega3);
  }
}

TEST_F(Certificate, SmallOffsetFailsTheScan) {
  LyapunovParams lyp = V->lyp();
  lyp.R = 10;
  LyapunovFunction W(*params, lyp, *eff);
  DriftScanOptions opt;
  opt.n_points = 20000;
  EXPECT_THROW(drift_scan(W, opt), ParameterRejection);
}
