#include "slnet/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "slnet/error.hpp"

namespace slnet {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double x) {
  x = std::remainder(x, 2.0 * kPi);
  if (x <= -kPi) x += 2.0 * kPi;
  return x;
}

// Continues the sequence across jumps larger than pi.
void unwrap(std::vector<double>& angles) {
  double offset = 0.0;
  for (std::size_t i = 1; i < angles.size(); ++i) {
    const double raw = angles[i] + offset;
    const double step = raw - angles[i - 1];
    if (step > kPi) {
      offset -= 2.0 * kPi * std::round(step / (2.0 * kPi));
    } else if (step < -kPi) {
      offset += 2.0 * kPi * std::round(-step / (2.0 * kPi));
    }
    angles[i] += offset;
  }
}

}  // namespace

OrderParameter order_parameter(std::span<const Complex> z) {
  if (z.empty()) throw DimensionError("order_parameter needs at least one oscillator");
  double re = 0.0;
  double im = 0.0;
  for (const auto& c : z) {
    re += c.real();
    im += c.imag();
  }
  const double n = static_cast<double>(z.size());
  OrderParameter op;
  op.R_tilde = std::hypot(re / n, im / n);
  op.Theta = op.R_tilde < 1e-12 ? 0.0 : std::atan2(im, re);
  return op;
}

double OrderParameterSeries::mean_R() const {
  if (R_tilde.empty()) return 0.0;
  return std::accumulate(R_tilde.begin(), R_tilde.end(), 0.0) / static_cast<double>(R_tilde.size());
}

OrderParameterSeries order_parameter_series(const Trajectory& trajectory) {
  OrderParameterSeries series;
  series.omega_intrinsic = trajectory.params.omega;
  series.times.reserve(trajectory.size());
  series.R_tilde.reserve(trajectory.size());
  series.Theta.reserve(trajectory.size());
  for (const auto& snap : trajectory.snapshots) {
    const auto op = order_parameter(snap.z);
    series.times.push_back(snap.t);
    series.R_tilde.push_back(op.R_tilde);
    series.Theta.push_back(op.Theta);
  }
  unwrap(series.Theta);
  return series;
}

FrequencyEstimate estimate_omega(const OrderParameterSeries& series) {
  const std::size_t n = series.times.size();
  if (n < 2 || series.Theta.size() != n) throw DimensionError("estimate_omega needs at least two samples");
  const double span = series.times.back() - series.times.front();
  if (series.omega_intrinsic != 0.0) {
    const double period = 2.0 * kPi / std::abs(series.omega_intrinsic);
    if (span < 5.0 * period) {
      std::ostringstream os;
      os << "measurement window " << span << " covers fewer than 5 periods (" << period << ")";
      throw ConfigError(os.str());
    }
  }
  FrequencyEstimate est;
  if (!(series.mean_R() > kIncoherentThreshold)) return est;

  const double t_mean = std::accumulate(series.times.begin(), series.times.end(), 0.0) / static_cast<double>(n);
  const double y_mean = std::accumulate(series.Theta.begin(), series.Theta.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = series.times[i] - t_mean;
    sxy += dt * (series.Theta[i] - y_mean);
    sxx += dt * dt;
  }
  est.defined = true;
  est.Omega = sxy / sxx;
  est.Delta = series.omega_intrinsic - est.Omega;
  return est;
}

double LockPartition::locked_fraction() const {
  if (is_locked.empty()) return 0.0;
  return static_cast<double>(locked.size()) / static_cast<double>(is_locked.size());
}

LockPartition detect_locked(const Trajectory& trajectory, double Omega, double tol_phase) {
  const std::size_t m = trajectory.size();
  const std::size_t n = trajectory.oscillators();
  if (m == 0 || n == 0) throw DimensionError("detect_locked needs a non-empty trajectory");

  // Rotating-frame reference phase of the order parameter.
  Complex ref_sum(0.0, 0.0);
  std::vector<Complex> frame(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto& snap = trajectory.snapshots[s];
    frame[s] = std::polar(1.0, -Omega * snap.t);
    Complex mean(0.0, 0.0);
    for (const auto& z : snap.z) mean += z;
    const Complex rotated = mean * frame[s];
    const double mag = std::abs(rotated);
    if (mag > 0.0) ref_sum += rotated / mag;
  }
  const double phi_ref = std::abs(ref_sum) > 0.0 ? std::arg(ref_sum) : 0.0;

  LockPartition part;
  part.phi_mean.resize(n);
  part.r_mean.resize(n);
  part.excursion.resize(n);
  part.is_locked.resize(n);
  std::vector<double> phase(m);
  for (std::size_t j = 0; j < n; ++j) {
    double r_sum = 0.0;
    Complex unit_sum(0.0, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
      const Complex w = trajectory.snapshots[s].z[j] * frame[s];
      phase[s] = std::arg(w);
      r_sum += std::abs(w);
      unit_sum += std::polar(1.0, phase[s]);
    }
    unwrap(phase);
    const auto [lo, hi] = std::minmax_element(phase.begin(), phase.end());
    part.excursion[j] = *hi - *lo;
    part.r_mean[j] = r_sum / static_cast<double>(m);
    const bool locked = part.excursion[j] < tol_phase;
    part.is_locked[j] = locked;
    if (locked) {
      const double mean = std::accumulate(phase.begin(), phase.end(), 0.0) / static_cast<double>(m);
      part.phi_mean[j] = wrap_angle(mean - phi_ref);
      part.locked.push_back(j);
    } else {
      part.phi_mean[j] = wrap_angle(std::arg(unit_sum) - phi_ref);
      part.drifting.push_back(j);
    }
  }
  return part;
}

std::vector<ProfilePoint> stationary_profiles(const LockPartition& partition, const CouplingSet& couplings) {
  if (couplings.size() != partition.size()) throw DimensionError("stationary_profiles: size mismatch");
  std::vector<ProfilePoint> out;
  out.reserve(partition.locked.size());
  for (const auto j : partition.locked) {
    out.push_back({couplings[j], partition.phi_mean[j], partition.r_mean[j], j});
  }
  std::sort(out.begin(), out.end(), [](const ProfilePoint& a, const ProfilePoint& b) {
    return a.K < b.K || (a.K == b.K && a.index < b.index);
  });
  return out;
}

std::vector<ProfileBin> bin_profile(std::span<const ProfilePoint> profile, double k_lo, double k_hi,
                                    std::size_t n_bins) {
  if (n_bins == 0) throw ConfigError("bin_profile needs at least one bin");
  std::vector<ProfileBin> acc(n_bins);
  const double width = (k_hi - k_lo) / static_cast<double>(n_bins);
  for (const auto& p : profile) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double pos = std::floor((p.K - k_lo) / width);
      b = pos <= 0.0 ? 0 : std::min(n_bins - 1, static_cast<std::size_t>(pos));
    }
    acc[b].K += p.K;
    acc[b].phi += p.phi;
    acc[b].r += p.r;
    ++acc[b].count;
  }
  std::vector<ProfileBin> out;
  for (auto& bin : acc) {
    if (bin.count == 0) continue;
    const double c = static_cast<double>(bin.count);
    out.push_back({bin.K / c, bin.phi / c, bin.r / c, bin.count});
  }
  return out;
}

std::vector<double> bin_slopes(std::span<const ProfileBin> bins, bool use_phi) {
  std::vector<double> slopes;
  if (bins.size() < 2) return slopes;
  const std::size_t n = bins.size();
  slopes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    const double dy = use_phi ? bins[b].phi - bins[a].phi : bins[b].r - bins[a].r;
    slopes.push_back(dy / (bins[b].K - bins[a].K));
  }
  return slopes;
}

bool single_positive_to_negative_change(std::span<const double> slopes) {
  int state = 0;  // 0: nothing yet, 1: in positive run, 2: in negative run after positives
  for (const double s : slopes) {
    if (s > 0.0) {
      if (state == 2) return false;
      state = 1;
    } else if (s < 0.0) {
      if (state == 0) return false;
      state = 2;
    }
  }
  return state == 2;
}

AmplitudeSlope amplitude_slope(std::span<const ProfilePoint> profile, double k_lo, double k_hi,
                               std::size_t n_bins) {
  AmplitudeSlope out;
  const auto bins = bin_profile(profile, k_lo, k_hi, n_bins);
  if (bins.size() < 2) return out;
  out.slopes = bin_slopes(bins, false);
  out.defined = true;
  out.mean_slope = std::accumulate(out.slopes.begin(), out.slopes.end(), 0.0) / static_cast<double>(out.slopes.size());
  out.inflection = single_positive_to_negative_change(out.slopes);
  return out;
}

void write_profile_csv(std::ostream& out, const LockPartition& partition, const CouplingSet& couplings) {
  if (couplings.size() != partition.size()) throw DimensionError("write_profile_csv: size mismatch");
  std::vector<std::size_t> order(couplings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return couplings[a] < couplings[b]; });
  out << "K,phi_star,r_star,locked\n";
  out.precision(17);
  for (const auto j : order) {
    out << couplings[j] << ',' << partition.phi_mean[j] << ',' << partition.r_mean[j] << ','
        << (partition.is_locked[j] ? 1 : 0) << '\n';
  }
}

}  // namespace slnet
