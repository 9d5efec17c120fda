#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "slnet/error.hpp"
#include "slnet/integrator.hpp"

using namespace slnet;

namespace {

// Uncoupled Stuart-Landau oscillator, closed form.
Complex exact(Complex z0, double lambda, double omega, double t) {
  const double r0sq = std::norm(z0);
  const double e = std::exp(2.0 * lambda * t);
  const double r = std::sqrt(lambda * r0sq * e / (lambda + r0sq * (e - 1.0)));
  return std::polar(r, std::arg(z0) + omega * t);
}

VectorField uncoupled(double lambda, double omega) {
  return [=](std::span<const Complex> z, std::span<Complex> dz) {
    for (std::size_t j = 0; j < z.size(); ++j) dz[j] = Complex(lambda - std::norm(z[j]), omega) * z[j];
  };
}

}  // namespace

TEST(Integrator, SnapshotCountIncludesEndpoints) {
  IntegrationPlan plan;
  plan.t_transient = 0.0;
  plan.t_measure = 1.0;
  plan.dt = 0.01;
  plan.record_stride = 1;
  EnsembleState s{{Complex(1.0, 0.0)}, 0.0};
  const auto tr = integrate(s, uncoupled(1.0, 1.0), plan);
  EXPECT_EQ(tr.size(), 101u);
  EXPECT_NEAR(tr.snapshots.back().t, 1.0, 1e-12);
}

TEST(Integrator, MatchesClosedForm) {
  IntegrationPlan plan;
  plan.t_transient = 0.0;
  plan.t_measure = 5.0;
  plan.record_stride = 50;
  EnsembleState s{{Complex(0.3, 0.1), Complex(-1.5, 0.2)}, 0.0};
  const auto tr = integrate(s, uncoupled(1.0, std::numbers::pi), plan);
  for (const auto& snap : tr.snapshots) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_LT(std::abs(snap.z[j] - exact(s.z[j], 1.0, std::numbers::pi, snap.t)), 1e-6);
    }
  }
}

TEST(Integrator, FourthOrderConvergence) {
  const Complex z0(0.2, 0.4);
  const auto err = [&](double dt) {
    IntegrationPlan plan;
    plan.t_transient = 0.0;
    plan.t_measure = 2.0;
    plan.dt = dt;
    plan.record_stride = 1;
    const auto tr = integrate(EnsembleState{{z0}, 0.0}, uncoupled(1.0, 2.0), plan);
    return std::abs(tr.snapshots.back().z[0] - exact(z0, 1.0, 2.0, 2.0));
  };
  const double ratio = err(0.04) / err(0.02);
  EXPECT_NEAR(std::log2(ratio), 4.0, 0.3);
}

TEST(Integrator, NonFiniteDerivativeThrowsWithLastState) {
  const VectorField blow = [](std::span<const Complex> z, std::span<Complex> dz) {
    for (std::size_t j = 0; j < z.size(); ++j) dz[j] = z[j] * z[j] * z[j] * 1e30;
  };
  IntegrationPlan plan;
  plan.t_transient = 0.0;
  plan.t_measure = 10.0;
  try {
    integrate(EnsembleState{{Complex(10.0, 0.0)}, 0.0}, blow, plan);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_TRUE(e.last_finite().finite());
    EXPECT_GE(e.time(), 0.0);
  }
}

TEST(Integrator, InitialStateDistribution) {
  ModelParams p;
  p.N = 5000;
  const auto s = init_state(p, 11);
  double mean_r = 0.0;
  Complex centroid(0.0, 0.0);
  for (const auto& z : s.z) {
    mean_r += std::abs(z);
    centroid += z;
  }
  mean_r /= 5000.0;
  EXPECT_NEAR(mean_r, 1.0, 0.01);
  EXPECT_LT(std::abs(centroid) / 5000.0, 0.05);
  EXPECT_EQ(init_state(p, 11).z, s.z);
}

TEST(Integrator, PlanValidation) {
  IntegrationPlan plan;
  plan.dt = 0.0;
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = IntegrationPlan{};
  plan.record_stride = 0;
  EXPECT_THROW(plan.validate(), ConfigError);
}

TEST(Integrator, TrajectoryCsvLayout) {
  IntegrationPlan plan;
  plan.t_transient = 0.0;
  plan.t_measure = 0.1;
  plan.record_stride = 5;
  const auto tr = integrate(EnsembleState{{Complex(1.0, 0.0), Complex(0.0, 1.0)}, 0.0}, uncoupled(1.0, 1.0), plan);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,osc_id,theta,r");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, tr.size() * 2);
}
