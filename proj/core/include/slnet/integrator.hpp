#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slnet/error.hpp"
#include "slnet/model.hpp"

namespace slnet {

struct IntegrationPlan {
  double dt = 0.01;
  double t_transient = 500.0;
  double t_measure = 100.0;
  std::size_t record_stride = 10;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t transient_steps() const;
  std::size_t total_steps() const;
};

/// Snapshots recorded during the measurement window only.
struct Trajectory {
  std::vector<EnsembleState> snapshots;
  ModelParams params;
  std::string source;

  std::size_t size() const noexcept { return snapshots.size(); }
  std::size_t oscillators() const noexcept { return snapshots.empty() ? 0 : snapshots.front().size(); }
  std::vector<double> times() const;
};

/// A derivative or state became non-finite. Carries the time of failure and
/// the last state that was still finite.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time, EnsembleState last_finite)
      : Error(what), time_(time), last_finite_(std::move(last_finite)) {}
  double time() const noexcept { return time_; }
  const EnsembleState& last_finite() const noexcept { return last_finite_; }

 private:
  double time_;
  EnsembleState last_finite_;
};

/// theta_j uniform on [0, 2 pi); r_j ~ Normal(sqrt(lambda), 0.1) redrawn until positive.
EnsembleState init_state(const ModelParams& params, std::uint64_t seed);

// Classical four-stage Runge-Kutta with reusable stage buffers.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t n);

  /// Advances z by dt in place. Throws IntegrationError (time = t) if the
  /// update is non-finite; z is left untouched in that case.
  void step(const VectorField& rhs, std::span<Complex> z, double t, double dt);

 private:
  std::vector<Complex> k1_, k2_, k3_, k4_, tmp_, next_;
};

EnsembleState rk4_step(const EnsembleState& state, const VectorField& rhs, double dt);

Trajectory integrate(const EnsembleState& initial, const VectorField& rhs, const IntegrationPlan& plan);

/// CSV `t,osc_id,theta,r`, one row per oscillator per snapshot. With
/// `unwrap_theta` the phase of each oscillator is continued across snapshots.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, bool unwrap_theta = false);

}  // namespace slnet
