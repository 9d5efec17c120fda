#pragma once

// Stationary-state theory of the mean-field model in the frame rotating with
// the population frequency Omega, with the population phase fixed at 0.
// All operations scale K by params.S internally, so callers pass the raw
// coupling strengths.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slnet/model.hpp"

namespace slnet {

enum class AmplitudeKind {
  stable,      // root of the amplitude cubic with u > lambda - c: locked oscillator
  unlocked,    // no such root: the oscillator drifts; r is the incoherent amplitude a
  incoherent,  // R = 0 and lambda - c > 0: r = a
  collapsed,   // R = 0 and lambda - c <= 0: amplitude death, r = 0
};

struct AmplitudeRoot {
  double r = 0.0;
  AmplitudeKind kind = AmplitudeKind::stable;

  bool locked() const noexcept { return kind == AmplitudeKind::stable; }
};

/// u [(m - u)^2 + Delta'^2] - (K R)^2 with u = r^2, m = lambda - K d0 cos(alpha)
/// and Delta' = Delta + K d0 sin(alpha).
double amplitude_cubic(double u, double K, double R_tilde, double Delta, const ModelParams& params);

/// Stable root of the amplitude cubic (bracketed on (max(0, m), u_hi] and
/// refined to machine precision).
AmplitudeRoot solve_amplitude(double K, double R_tilde, double Delta, const ModelParams& params);

/// Incoherent amplitude a = sqrt(lambda - K d0 cos(alpha)), 0 if the radicand is negative.
double incoherent_amplitude(double K, const ModelParams& params);

/// K R > |Delta'| r.
bool locking_condition(double K, double r_star, double R_tilde, double Delta, const ModelParams& params);

/// Principal-branch locked phase arcsin(Delta' r / (K R)) - beta, or nullopt
/// when the locking condition fails.
std::optional<double> locked_phase(double K, double r_star, double R_tilde, double Delta, const ModelParams& params);

/// dphi*/dK at fixed r: -Delta r / (K^2 R cos(phi + beta)).
double phase_slope(double K, double r_star, double phi_star, double R_tilde, double Delta, const ModelParams& params);

/// dr*/dK at fixed phi + beta: Delta R sin(phi + beta) / Delta'^2.
double amplitude_slope_partial(double K, double phi_star, double R_tilde, double Delta, const ModelParams& params);

/// Total derivative of the stable root of the amplitude cubic with respect to
/// K (implicit differentiation). NaN if the oscillator is not locked.
double amplitude_slope_total(double K, double R_tilde, double Delta, const ModelParams& params);

/// -sign(Delta); 0 when |Delta| < 1e-9.
int phi_slope_sign(double Delta);

struct RSlopeSign {
  int sign = 0;
  bool contradiction = false;  // phi + beta outside (-pi/2, pi/2)
};

/// sign(Delta sin(phi + beta)).
RSlopeSign r_slope_sign(double Delta, double phi_star, double beta);

struct OscillatorPrediction {
  double K = 0.0;
  double r = 0.0;
  double phi = 0.0;  // 0 for drifting oscillators
  bool locked = false;
  AmplitudeKind kind = AmplitudeKind::stable;
};

/// Per-oscillator prediction in the order of the coupling set.
std::vector<OscillatorPrediction> predict_profile(double R_tilde, double Delta, const ModelParams& params,
                                                  const CouplingSet& couplings);

/// Membership of each coupling in the locked set.
std::vector<bool> locking_range(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings);

/// (1/N) sum over locked j of r_j e^{i phi_j}.
Complex locked_contribution(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings);

/// Same sum written as e^{-i beta} r (sqrt(K^2 R^2 - Delta'^2 r^2) + i Delta') / (K R).
Complex locked_contribution_integrand(double R_tilde, double Delta, const ModelParams& params,
                                      const CouplingSet& couplings);

struct DriftContribution {
  Complex value{0.0, 0.0};
  std::size_t excluded = 0;  // drifting terms with lambda - K d0 cos(alpha) <= 0, left out
};

/// First-order drifting contribution
/// (1/N) sum over drifting j of e^{-i beta} K R (2a^2 + i Delta') / (Delta'^2 + 4a^4) / 2.
DriftContribution drift_contribution(double R_tilde, double Delta, const ModelParams& params,
                                     const CouplingSet& couplings);

/// R_l + R_d - R.
Complex self_consistency_residual(double R_tilde, double Delta, const ModelParams& params,
                                  const CouplingSet& couplings);

struct SelfConsistentSolution {
  double R_tilde = 0.0;
  double Delta = 0.0;
  bool converged = false;
  double residual = 0.0;
  bool incoherent = false;
  std::string branch_note;
};

struct SolverOptions {
  std::optional<std::pair<double, double>> init;  // (R, Delta) starting point
  double tolerance = 1e-8;
  int max_iterations = 80;
};

/// Damped Newton on (R, Delta) with a finite-difference Jacobian, started from
/// `init` when given and from the best cells of a coarse grid otherwise.
SelfConsistentSolution solve_self_consistency(const ModelParams& params, const CouplingSet& couplings,
                                              const SolverOptions& options = {});

struct KInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Locked sub-intervals of [k_lo, k_hi] found by a dense scan of the locking
/// margin followed by bisection of every sign change.
std::vector<KInterval> locked_intervals(double R_tilde, double Delta, const ModelParams& params, double k_lo,
                                        double k_hi, std::size_t samples = 2001);

enum class MajorState { S1, S2, S3, S4 };
enum class LockPattern { l0, l_plus, l_minus, dl_plus, dl_minus, l_plus_d, l_minus_d, dl_plus_d, dl_minus_d, d };
enum class AmpSlopeKind { positive, negative, mixed_pos_to_neg, undefined };

std::string to_string(MajorState major);
std::string to_string(LockPattern pattern);
std::string to_string(AmpSlopeKind kind);

struct StateLabel {
  MajorState major = MajorState::S4;
  LockPattern pattern = LockPattern::d;
  AmpSlopeKind amp_slope = AmpSlopeKind::undefined;
  int table = 1;           // 1: d0 sin(alpha) >= 0, 2: d0 sin(alpha) < 0
  bool ambiguous = false;  // no row matched cleanly; nearest row chosen
  std::string note;

  /// e.g. "S2_dl-".
  std::string name() const;
};

/// Whether (major, pattern) is a row of the given table.
bool is_legal_state(int table, MajorState major, LockPattern pattern);

/// Tie tolerance for the strict inequalities of the state tables.
inline constexpr double kStateTieTolerance = 1e-9;

/// Where the locked set sits within [K_min, K_max].
struct LockLayout {
  bool any_locked = false;
  bool lead_drift = false;   // the smallest couplings drift
  bool trail_drift = false;  // the largest couplings drift
  bool fragmented = false;   // more than one locked run
  double in_phase_tolerance = 1e-6;  // |Delta| below this with full locking is l0
};

/// Table row for a given locked-set layout: table by sign of d0 sin(alpha),
/// pattern by layout and -sign(Delta), major state by sign(Delta) and R_tilde
/// against D0 at K_min and K_max. amp_slope is left undefined.
StateLabel label_from_layout(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings,
                             const LockLayout& layout);

/// Sign structure of K-ordered amplitude slopes (zeros ignored).
AmpSlopeKind classify_slopes(std::span<const double> slopes);

/// Label from the theoretical locked set of (R_tilde, Delta).
StateLabel classify_state(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings);

struct TheoryPoint {
  SelfConsistentSolution solution;
  StateLabel label;
  std::optional<double> K_lock_lo;
  std::optional<double> K_lock_hi;
  std::vector<OscillatorPrediction> profile;
};

/// Self-consistent solve, classification, locking range and predicted profile.
TheoryPoint evaluate_theory(const ModelParams& params, const CouplingSet& couplings, const SolverOptions& options = {});

/// {R_tilde, Delta, converged, residual, state_label, K_lock_lo, K_lock_hi}
/// plus a few descriptive extras.
std::string theory_json(const TheoryPoint& point);

/// CSV `K,phi_star_pred,r_star_pred,locked_pred`, sorted by K.
void write_prediction_csv(std::ostream& out, const std::vector<OscillatorPrediction>& profile);

}  // namespace slnet
