#include "slnet/integrator.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "slnet/rng.hpp"

namespace slnet {

namespace {

std::size_t rounded_steps(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

void IntegrationPlan::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_transient >= 0.0) || !std::isfinite(t_transient)) throw ConfigError("t_transient must be >= 0");
  if (!(t_measure >= 10.0 * dt) || !std::isfinite(t_measure)) throw ConfigError("t_measure must be at least 10 dt");
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
}

std::size_t IntegrationPlan::transient_steps() const { return rounded_steps(t_transient, dt); }

std::size_t IntegrationPlan::total_steps() const { return rounded_steps(t_transient + t_measure, dt); }

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.t);
  return t;
}

EnsembleState init_state(const ModelParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const double mean_r = std::sqrt(params.lambda);
  EnsembleState state;
  state.z.resize(params.N);
  for (auto& z : state.z) {
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    double r = 0.0;
    do {
      r = rng.normal(mean_r, 0.1);
    } while (!(r > 0.0));
    z = std::polar(r, theta);
  }
  return state;
}

Rk4Stepper::Rk4Stepper(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n), next_(n) {}

void Rk4Stepper::step(const VectorField& rhs, std::span<Complex> z, double t, double dt) {
  const std::size_t n = z.size();
  if (n != k1_.size()) throw DimensionError("Rk4Stepper: state size changed");
  if (!(dt > 0.0)) throw ConfigError("rk4 step requires dt > 0");
  const double h2 = 0.5 * dt;
  const double h6 = dt / 6.0;

  // Flat real views; a complex array is laid out as (re, im) pairs.
  const std::size_t m = 2 * n;
  const double* y = reinterpret_cast<const double*>(z.data());
  double* tmp = reinterpret_cast<double*>(tmp_.data());
  double* next = reinterpret_cast<double*>(next_.data());
  const double* k1 = reinterpret_cast<const double*>(k1_.data());
  const double* k2 = reinterpret_cast<const double*>(k2_.data());
  const double* k3 = reinterpret_cast<const double*>(k3_.data());
  const double* k4 = reinterpret_cast<const double*>(k4_.data());

  rhs(z, k1_);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + h2 * k1[i];
  rhs(tmp_, k2_);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + h2 * k2[i];
  rhs(tmp_, k3_);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + dt * k3[i];
  rhs(tmp_, k4_);

  // Any inf or NaN in the update propagates into the checksum.
  double check = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    next[i] = y[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    check += next[i] * 0.0;
  }
  if (!std::isfinite(check)) {
    std::ostringstream os;
    os << "non-finite derivative at t = " << t;
    throw IntegrationError(os.str(), t, EnsembleState{std::vector<Complex>(z.begin(), z.end()), t});
  }
  std::copy(next_.begin(), next_.end(), z.begin());
}

EnsembleState rk4_step(const EnsembleState& state, const VectorField& rhs, double dt) {
  EnsembleState out = state;
  Rk4Stepper stepper(state.size());
  stepper.step(rhs, out.z, state.t, dt);
  out.t = state.t + dt;
  return out;
}

Trajectory integrate(const EnsembleState& initial, const VectorField& rhs, const IntegrationPlan& plan) {
  plan.validate();
  if (!initial.finite()) {
    throw IntegrationError("initial state is not finite", initial.t, EnsembleState{});
  }
  const std::size_t warmup = plan.transient_steps();
  const std::size_t total = plan.total_steps();
  Trajectory traj;
  traj.snapshots.reserve((total - warmup) / plan.record_stride + 1);

  EnsembleState state = initial;
  const double t0 = initial.t;
  Rk4Stepper stepper(state.size());
  for (std::size_t i = 0;; ++i) {
    // Time is recomputed from the step index so spacing stays exact.
    state.t = t0 + static_cast<double>(i) * plan.dt;
    if (i >= warmup && (i - warmup) % plan.record_stride == 0) {
      traj.snapshots.push_back(state);
    }
    if (i == total) break;
    stepper.step(rhs, state.z, state.t, plan.dt);
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, bool unwrap_theta) {
  out << "t,osc_id,theta,r\n";
  const std::size_t n = trajectory.oscillators();
  std::vector<double> previous(n, 0.0);
  std::vector<double> offset(n, 0.0);
  out.precision(17);
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    const auto& snap = trajectory.snapshots[s];
    for (std::size_t j = 0; j < n; ++j) {
      double theta = std::arg(snap.z[j]);
      if (unwrap_theta) {
        if (s > 0) {
          const double step = theta - previous[j];
          if (step > std::numbers::pi) offset[j] -= 2.0 * std::numbers::pi;
          if (step < -std::numbers::pi) offset[j] += 2.0 * std::numbers::pi;
        }
        previous[j] = theta;
        theta += offset[j];
      }
      out << snap.t << ',' << j << ',' << theta << ',' << std::abs(snap.z[j]) << '\n';
    }
  }
}

}  // namespace slnet
