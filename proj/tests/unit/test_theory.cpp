#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "slnet/networks.hpp"
#include "slnet/rng.hpp"
#include "slnet/theory.hpp"

using namespace slnet;

namespace {

constexpr double kPi = std::numbers::pi;

ModelParams make(double alpha, double beta, double d0) {
  ModelParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.d0 = d0;
  return p;
}

// Stable root by brute-force scan of the cubic above max(0, m), refined by bisection.
std::optional<double> scan_root(double K, double R, double Delta, const ModelParams& p) {
  const double m = p.lambda - p.S * K * p.d0 * std::cos(p.alpha);
  const double lo = std::max(0.0, m);
  const auto f = [&](double u) { return amplitude_cubic(u, K, R, Delta, p); };
  if (f(lo) >= 0.0) return std::nullopt;
  const double hi_end = lo + 4.0 * p.lambda + 10.0;
  const int n = 200000;
  double a = lo;
  for (int i = 1; i <= n; ++i) {
    double b = lo + (hi_end - lo) * i / n;
    if (f(b) >= 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        (f(mid) < 0.0 ? a : b) = mid;
      }
      return std::sqrt(0.5 * (a + b));
    }
    a = b;
  }
  return std::nullopt;
}

// Rotating-frame velocity of z = r e^{i phi} under the field R (phase 0).
Complex rotating_velocity(double K, double r, double phi, double R, double Delta, const ModelParams& p) {
  const Complex z = std::polar(r, phi);
  const double Ke = p.S * K;
  return Complex(p.lambda - r * r, Delta) * z + Ke * (R * std::polar(1.0, -p.beta) - p.d0 * std::polar(1.0, -p.alpha) * z);
}

CouplingSet gaussian(std::size_t n, std::uint64_t seed) {
  DistributionSpec spec;
  spec.seed = seed;
  return sample_couplings(spec, n);
}

}  // namespace

TEST(Theory, InPhaseAmplitude) {
  const auto p = make(0.0, 0.3, 1.0);
  const auto root = solve_amplitude(0.02, 1.0, 0.0, p);
  EXPECT_TRUE(root.locked());
  EXPECT_NEAR(root.r, 1.0, 1e-12);
}

TEST(Theory, IncoherentAmplitude) {
  const auto p = make(0.5 * kPi, 0.0, 1.0);
  const auto root = solve_amplitude(0.02, 0.0, 0.0, p);
  EXPECT_EQ(root.kind, AmplitudeKind::incoherent);
  EXPECT_NEAR(root.r, 1.0, 1e-12);
  EXPECT_NEAR(incoherent_amplitude(0.02, p), 1.0, 1e-12);
  auto q = make(0.0, 0.0, 100.0);
  EXPECT_EQ(solve_amplitude(0.02, 0.0, 0.0, q).kind, AmplitudeKind::collapsed);
  EXPECT_EQ(solve_amplitude(0.02, 0.0, 0.0, q).r, 0.0);
}

TEST(Theory, AmplitudeMatchesScanExample) {
  const auto p = make(0.25 * kPi, 0.0, 1.0);
  const auto root = solve_amplitude(0.02, 0.1, 0.05, p);
  const auto oracle = scan_root(0.02, 0.1, 0.05, p);
  ASSERT_EQ(root.locked(), oracle.has_value());
  if (oracle) EXPECT_NEAR(root.r, *oracle, 1e-9);
}

TEST(Theory, AmplitudeMatchesScanRandom) {
  Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    auto p = make(kPi * rng.uniform() * 0.999, 0.5 * kPi * rng.uniform() * 0.999, -2.0 + 4.0 * rng.uniform());
    const double K = 0.001 + 0.1 * rng.uniform();
    const double R = 1.2 * rng.uniform();
    const double Delta = -0.2 + 0.4 * rng.uniform();
    const auto root = solve_amplitude(K, R, Delta, p);
    const auto oracle = scan_root(K, R, Delta, p);
    ASSERT_EQ(root.locked(), oracle.has_value()) << i;
    if (oracle) EXPECT_NEAR(root.r, *oracle, 1e-9) << i;
  }
}

TEST(Theory, LockedPhaseExamples) {
  const auto p = make(0.0, 0.0, 0.0);
  const auto r = solve_amplitude(0.02, 0.8, 0.0, p).r;
  EXPECT_NEAR(*locked_phase(0.02, r, 0.8, 0.0, p), 0.0, 1e-15);
  const auto q = make(0.0, 0.2 * kPi, 0.0);
  const auto rq = solve_amplitude(0.02, 0.8, 0.0, q).r;
  EXPECT_NEAR(*locked_phase(0.02, rq, 0.8, 0.0, q), -0.2 * kPi, 1e-15);
}

TEST(Theory, LockedStatesAreStationary) {
  Rng rng(5);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const auto p = make(kPi * rng.uniform() * 0.999, 0.49 * kPi * rng.uniform(), -2.0 + 4.0 * rng.uniform());
    const double K = 0.005 + 0.03 * rng.uniform();
    const double R = 0.2 + rng.uniform();
    const double Delta = -0.05 + 0.1 * rng.uniform();
    const auto root = solve_amplitude(K, R, Delta, p);
    if (!root.locked()) {
      EXPECT_FALSE(locked_phase(K, root.r, R, Delta, p).has_value());
      continue;
    }
    ASSERT_TRUE(locking_condition(K, root.r, R, Delta, p));
    const auto phi = locked_phase(K, root.r, R, Delta, p);
    ASSERT_TRUE(phi.has_value());
    EXPECT_LT(std::abs(rotating_velocity(K, root.r, *phi, R, Delta, p)), 1e-10);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Theory, PhaseSlopeMatchesFiniteDifference) {
  const auto p = make(0.3 * kPi, 0.1 * kPi, 0.8);
  const double R = 0.9, Delta = -0.005, r = 1.0, K = 0.02, h = 1e-7;
  ASSERT_TRUE(locked_phase(K, r, R, Delta, p).has_value());
  const auto phi = [&](double k) { return *locked_phase(k, r, R, Delta, p); };
  const double fd = (phi(K + h) - phi(K - h)) / (2 * h);
  const double an = phase_slope(K, r, phi(K), R, Delta, p);
  EXPECT_NEAR(an, fd, 1e-5 * std::abs(fd));
}

TEST(Theory, AmplitudeSlopeMatchesFiniteDifference) {
  Rng rng(8);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const auto p = make(kPi * rng.uniform() * 0.999, 0.49 * kPi * rng.uniform(), -2.0 + 4.0 * rng.uniform());
    const double K = 0.005 + 0.03 * rng.uniform();
    const double R = 0.3 + rng.uniform();
    const double Delta = -0.05 + 0.1 * rng.uniform();
    const double h = 1e-6 * K;
    const auto a = solve_amplitude(K - h, R, Delta, p);
    const auto b = solve_amplitude(K + h, R, Delta, p);
    if (!a.locked() || !b.locked()) continue;
    const double fd = (b.r - a.r) / (2 * h);
    const double an = amplitude_slope_total(K, R, Delta, p);
    EXPECT_NEAR(an, fd, 1e-5 * std::max(std::abs(fd), 1e-3)) << i;
    // Partial at fixed phi + beta: r = Ke R sin(psi) / Delta'.
    const double r0 = solve_amplitude(K, R, Delta, p).r;
    const double psi = *locked_phase(K, r0, R, Delta, p) + p.beta;
    const auto r_fixed_psi = [&](double k) {
      return p.S * k * R * std::sin(psi) / (Delta + p.S * k * p.d0 * std::sin(p.alpha));
    };
    const double fd2 = (r_fixed_psi(K + h) - r_fixed_psi(K - h)) / (2 * h);
    EXPECT_NEAR(amplitude_slope_partial(K, psi - p.beta, R, Delta, p), fd2, 1e-5 * std::max(std::abs(fd2), 1e-3));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Theory, SlopeSigns) {
  EXPECT_EQ(phi_slope_sign(-0.1), 1);
  EXPECT_EQ(phi_slope_sign(0.1), -1);
  EXPECT_EQ(phi_slope_sign(0.0), 0);
  EXPECT_EQ(r_slope_sign(-0.1, -0.3, 0.1).sign, 1);
  EXPECT_EQ(r_slope_sign(0.1, 0.3, 0.1).sign, 1);
  EXPECT_EQ(r_slope_sign(0.1, -0.1, 0.1).sign, 0);
  EXPECT_TRUE(r_slope_sign(0.1, 2.0, 0.1).contradiction);
}

TEST(Theory, LockingRangeTrivialCases) {
  const auto p = make(0.0, 0.2, 0.0);
  const auto K = gaussian(200, 1);
  const auto all = locking_range(0.7, 0.0, p, K);
  EXPECT_TRUE(std::all_of(all.begin(), all.end(), [](bool b) { return b; }));
}

TEST(Theory, LockedSumForms) {
  const auto p = make(0.0, 0.0, 1.0);
  const CouplingSet K(std::vector<double>(10, 0.02));
  const auto Rl = locked_contribution(1.0, 0.0, p, K);
  EXPECT_NEAR(Rl.real(), 1.0, 1e-12);
  EXPECT_NEAR(Rl.imag(), 0.0, 1e-12);
  Rng rng(3);
  const auto G = gaussian(300, 4);
  for (int i = 0; i < 50; ++i) {
    const auto q = make(kPi * rng.uniform() * 0.999, 0.49 * kPi * rng.uniform(), -2.0 + 4.0 * rng.uniform());
    const double R = 0.1 + rng.uniform();
    const double Delta = -0.03 + 0.06 * rng.uniform();
    const auto a = locked_contribution(R, Delta, q, G);
    const auto b = locked_contribution_integrand(R, Delta, q, G);
    EXPECT_LT(std::abs(a - b), 1e-12);
  }
}

TEST(Theory, DriftContributionProperties) {
  const auto K = gaussian(300, 6);
  auto p = make(0.5 * kPi, 0.0, 1.0);
  const double R = 0.3, Delta = 0.2;
  const auto d0 = drift_contribution(R, Delta, p, K);
  p.beta = 0.3;
  const auto d1 = drift_contribution(R, Delta, p, K);
  EXPECT_LT(std::abs(d1.value - std::polar(1.0, -0.3) * d0.value), 1e-14);
  // All locked: nothing drifts.
  auto q = make(0.0, 0.0, 0.0);
  EXPECT_EQ(drift_contribution(1.0, 0.0, q, K).value, Complex(0.0, 0.0));
  // Past amplitude death the cubic always has a root when R > 0, so nothing is excluded.
  auto death = make(0.0, 0.0, 100.0);
  const auto dd = drift_contribution(0.01, 0.5, death, K);
  EXPECT_EQ(dd.excluded, 0u);
}

TEST(Theory, HomogeneousSelfConsistency) {
  const CouplingSet K(std::vector<double>(50, 0.02));
  {
    const auto p = make(0.0, 0.0, 1.0);
    const auto s = solve_self_consistency(p, K);
    ASSERT_TRUE(s.converged);
    EXPECT_NEAR(s.R_tilde, 1.0, 1e-8);
    EXPECT_NEAR(s.Delta, 0.0, 1e-8);
  }
  {
    const auto p = make(0.5 * kPi, 0.0, 1.0);
    const auto s = solve_self_consistency(p, K);
    ASSERT_TRUE(s.converged);
    EXPECT_NEAR(s.R_tilde, std::sqrt(1.02), 1e-8);
    EXPECT_NEAR(s.Delta, -0.02, 1e-8);
    EXPECT_LT(s.residual, 1e-8);
  }
  Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    const auto p = make(kPi * rng.uniform() * 0.99, 0.45 * kPi * rng.uniform(), -2.0 + 4.0 * rng.uniform());
    const double k = 0.02;
    const double rsq = p.lambda + k * (std::cos(p.beta) - p.d0 * std::cos(p.alpha));
    const auto s = solve_self_consistency(p, K);
    ASSERT_TRUE(s.converged) << i;
    EXPECT_NEAR(s.R_tilde, std::sqrt(rsq), 1e-7) << i;
    EXPECT_NEAR(s.Delta, k * (std::sin(p.beta) - p.d0 * std::sin(p.alpha)), 1e-7) << i;
  }
}

TEST(Theory, GaussianSolutionIsSelfConsistent) {
  const auto K = gaussian(1000, 3);
  const auto p = make(0.5 * kPi, 0.2 * kPi, 0.5);
  const auto s = solve_self_consistency(p, K);
  ASSERT_TRUE(s.converged);
  EXPECT_LT(std::abs(self_consistency_residual(s.R_tilde, s.Delta, p, K)), 1e-8);
  EXPECT_GE(s.R_tilde, 0.0);
}

TEST(Theory, IncoherentBranch) {
  const auto K = gaussian(500, 2);
  const auto p = make(0.0, 0.49 * kPi, 1.0);
  const auto pt = evaluate_theory(p, K);
  if (pt.solution.incoherent) {
    EXPECT_EQ(pt.solution.R_tilde, 0.0);
    EXPECT_TRUE(std::isnan(pt.solution.Delta));
    EXPECT_EQ(pt.label.name(), "S4_d");
    EXPECT_NE(theory_json(pt).find("\"Delta\": null"), std::string::npos);
  }
}

TEST(Theory, ClassifierIsTotal) {
  const auto K = gaussian(200, 9);
  for (const double alpha : {0.0, 0.25 * kPi, 0.5 * kPi, 0.75 * kPi}) {
    for (const double d0 : {-1.5, -0.3, 0.0, 0.4, 1.7}) {
      const auto p = make(alpha, 0.2 * kPi, d0);
      for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
          const double R = 0.05 * i;
          const double Delta = -0.1 + 0.01 * j;
          const auto label = classify_state(R, Delta, p, K);
          const bool legal = is_legal_state(label.table, label.major, label.pattern);
          EXPECT_TRUE(legal || label.ambiguous) << label.name();
          EXPECT_EQ(label.table, p.d0 * std::sin(p.alpha) >= 0.0 ? 1 : 2);
        }
      }
    }
  }
}

TEST(Theory, InPhaseLabel) {
  const CouplingSet K(std::vector<double>(20, 0.02));
  const double beta = 0.2 * kPi;
  auto p = make(0.5 * kPi, beta, std::sin(beta));
  const auto pt = evaluate_theory(p, K);
  ASSERT_TRUE(pt.solution.converged);
  EXPECT_NEAR(pt.solution.Delta, 0.0, 1e-9);
  EXPECT_EQ(pt.label.pattern, LockPattern::l0);
  EXPECT_EQ(pt.label.major, MajorState::S1);
}

TEST(Theory, ClassifySlopes) {
  EXPECT_EQ(classify_slopes(std::vector<double>{1, 2, 3}), AmpSlopeKind::positive);
  EXPECT_EQ(classify_slopes(std::vector<double>{-1, -2}), AmpSlopeKind::negative);
  EXPECT_EQ(classify_slopes(std::vector<double>{1, 0, -2}), AmpSlopeKind::mixed_pos_to_neg);
  EXPECT_EQ(classify_slopes(std::vector<double>{-1, 1}), AmpSlopeKind::undefined);
  EXPECT_EQ(classify_slopes(std::vector<double>{}), AmpSlopeKind::undefined);
}

TEST(Theory, PredictionCsv) {
  const auto K = gaussian(50, 1);
  const auto pt = evaluate_theory(make(0.5 * kPi, 0.1 * kPi, 0.5), K);
  std::ostringstream os;
  write_prediction_csv(os, pt.profile);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "K,phi_star_pred,r_star_pred,locked_pred");
}
