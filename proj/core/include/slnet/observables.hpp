#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "slnet/integrator.hpp"
#include "slnet/model.hpp"

namespace slnet {

/// Phase-spread tolerance for calling an oscillator locked, in radians.
inline constexpr double kDefaultLockTolerance = 0.05;
/// Number of equal-width K bins used for profile slopes.
inline constexpr std::size_t kDefaultSlopeBins = 25;
/// Below this time-averaged R the population phase is treated as noise.
inline constexpr double kIncoherentThreshold = 1e-3;

struct OrderParameter {
  double R_tilde = 0.0;
  double Theta = 0.0;
};

/// Magnitude and argument of (1/N) sum_j z_j; Theta is 0 when R < 1e-12.
OrderParameter order_parameter(std::span<const Complex> z);

struct OrderParameterSeries {
  std::vector<double> times;
  std::vector<double> R_tilde;
  std::vector<double> Theta;  // unwrapped
  double omega_intrinsic = 0.0;

  double mean_R() const;
};

OrderParameterSeries order_parameter_series(const Trajectory& trajectory);

struct FrequencyEstimate {
  bool defined = false;  // false: incoherent, Omega carries no meaning
  double Omega = 0.0;
  double Delta = 0.0;    // omega - Omega
};

/// Least-squares slope of the unwrapped Theta(t). Throws ConfigError if the
/// window spans fewer than five intrinsic periods.
FrequencyEstimate estimate_omega(const OrderParameterSeries& series);

// Measured membership of the locked and drifting subpopulations. Phases are
// rotating-frame phases measured relative to the window-mean of Theta - Omega t,
// so the order parameter sits at phase 0.
struct LockPartition {
  std::vector<std::size_t> locked;
  std::vector<std::size_t> drifting;
  std::vector<double> phi_mean;   // per oscillator; circular mean for drifters
  std::vector<double> r_mean;     // per oscillator window mean
  std::vector<double> excursion;  // max - min of the unwrapped rotating-frame phase
  std::vector<bool> is_locked;

  std::size_t size() const noexcept { return is_locked.size(); }
  double locked_fraction() const;
};

LockPartition detect_locked(const Trajectory& trajectory, double Omega, double tol_phase = kDefaultLockTolerance);

struct ProfilePoint {
  double K = 0.0;
  double phi = 0.0;
  double r = 0.0;
  std::size_t index = 0;
};

/// Locked oscillators only, sorted by K (ties by index).
std::vector<ProfilePoint> stationary_profiles(const LockPartition& partition, const CouplingSet& couplings);

struct ProfileBin {
  double K = 0.0;
  double phi = 0.0;
  double r = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [k_lo, k_hi]; empty bins are dropped.
std::vector<ProfileBin> bin_profile(std::span<const ProfilePoint> profile, double k_lo, double k_hi,
                                    std::size_t n_bins = kDefaultSlopeBins);

/// Centered finite-difference slopes dy/dK across bins (one-sided at the ends).
std::vector<double> bin_slopes(std::span<const ProfileBin> bins, bool use_phi);

struct AmplitudeSlope {
  bool defined = false;  // false when fewer than two bins are occupied
  double mean_slope = 0.0;
  bool inflection = false;  // slopes go from positive to negative exactly once
  std::vector<double> slopes;
};

AmplitudeSlope amplitude_slope(std::span<const ProfilePoint> profile, double k_lo, double k_hi,
                               std::size_t n_bins = kDefaultSlopeBins);

/// True iff the sign sequence (zeros skipped) is a non-empty run of positives
/// followed by a non-empty run of negatives.
bool single_positive_to_negative_change(std::span<const double> slopes);

/// CSV `K,phi_star,r_star,locked` for every oscillator, sorted by K.
void write_profile_csv(std::ostream& out, const LockPartition& partition, const CouplingSet& couplings);

}  // namespace slnet
