#include "slnet/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "slnet/error.hpp"

namespace slnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int sgn(double x, double tol = 0.0) { return x > tol ? 1 : (x < -tol ? -1 : 0); }

// Coefficients of one oscillator with the S-scaled coupling.
struct Local {
  double Ke;  // S K
  double m;   // lambda - Ke d0 cos(alpha)
  double dp;  // Delta + Ke d0 sin(alpha)
};

Local local(double K, double Delta, const ModelParams& p) {
  const double Ke = p.S * K;
  return {Ke, p.lambda - Ke * p.d0 * std::cos(p.alpha), Delta + Ke * p.d0 * std::sin(p.alpha)};
}

double cubic(double u, double m, double dp, double q) {
  const double w = m - u;
  return u * (w * w + dp * dp) - q;
}

double cubic_derivative(double u, double m, double dp) {
  const double w = m - u;
  return w * w + dp * dp - 2.0 * u * w;
}

// Root of the cubic above max(0, m); the cubic is increasing and convex there,
// so Newton from the right end converges monotonically.
AmplitudeRoot stable_root(double m, double dp, double q) {
  const double lo = std::max(0.0, m);
  if (cubic(lo, m, dp, q) >= 0.0) {
    return {std::sqrt(std::max(m, 0.0)), AmplitudeKind::unlocked};
  }
  double hi = lo + std::cbrt(q) * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  while (cubic(hi, m, dp, q) < 0.0) hi = lo + 2.0 * (hi - lo);

  double a = lo;
  double b = hi;
  double u = hi;
  for (int it = 0; it < 200; ++it) {
    const double f = cubic(u, m, dp, q);
    if (f > 0.0) {
      b = u;
    } else if (f < 0.0) {
      a = u;
    } else {
      break;
    }
    const double fp = cubic_derivative(u, m, dp);
    double next = u - f / fp;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - u) <= 4.0 * std::numeric_limits<double>::epsilon() * u || b - a <= 0.0) {
      u = next;
      break;
    }
    u = next;
  }
  return {std::sqrt(u), AmplitudeKind::stable};
}

AmplitudeRoot root_for(const Local& L, double R) {
  if (R == 0.0) {
    if (L.m > 0.0) return {std::sqrt(L.m), AmplitudeKind::incoherent};
    return {0.0, AmplitudeKind::collapsed};
  }
  const double kr = L.Ke * R;
  return stable_root(L.m, L.dp, kr * kr);
}

void require_inputs(double K, double R) {
  if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("coupling K must be positive");
  if (!(R >= 0.0) || !std::isfinite(R)) throw ConfigError("R_tilde must be non-negative");
}

// Per-oscillator constants reused by every residual evaluation of one solve.
struct Ensemble {
  std::vector<double> Ke;
  std::vector<double> m;
  std::vector<double> s;  // Ke d0 sin(alpha)
  double cos_beta;
  double sin_beta;

  Ensemble(const ModelParams& p, const CouplingSet& couplings)
      : cos_beta(std::cos(p.beta)), sin_beta(std::sin(p.beta)) {
    const std::size_t n = couplings.size();
    Ke.resize(n);
    m.resize(n);
    s.resize(n);
    const double ca = p.d0 * std::cos(p.alpha);
    const double sa = p.d0 * std::sin(p.alpha);
    for (std::size_t j = 0; j < n; ++j) {
      Ke[j] = p.S * couplings[j];
      m[j] = p.lambda - Ke[j] * ca;
      s[j] = Ke[j] * sa;
    }
  }

  std::size_t size() const { return Ke.size(); }
};

struct Contributions {
  Complex locked{0.0, 0.0};
  Complex drift{0.0, 0.0};
  std::size_t excluded = 0;
};

// Locked sum uses r e^{i psi} with sin psi = Delta' r / (K R) and cos psi > 0.
Contributions contributions(const Ensemble& e, double R, double Delta) {
  Contributions out;
  if (!(R > 0.0)) return out;
  double lr = 0.0;
  double li = 0.0;
  double dr = 0.0;
  double di = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double kr = e.Ke[j] * R;
    const double dp = Delta + e.s[j];
    const auto root = stable_root(e.m[j], dp, kr * kr);
    if (root.locked()) {
      const double sin_psi = std::clamp(dp * root.r / kr, -1.0, 1.0);
      const double cos_psi = std::sqrt(std::max(0.0, 1.0 - sin_psi * sin_psi));
      lr += root.r * cos_psi;
      li += root.r * sin_psi;
    } else {
      const double a2 = e.m[j];
      const double den = dp * dp + 4.0 * a2 * a2;
      if (!(a2 > 0.0) || !(den > 0.0)) {
        ++out.excluded;
        continue;
      }
      dr += 0.5 * kr * 2.0 * a2 / den;
      di += 0.5 * kr * dp / den;
    }
  }
  const double n = static_cast<double>(e.size());
  const Complex rot(e.cos_beta, -e.sin_beta);
  out.locked = rot * Complex(lr / n, li / n);
  out.drift = rot * Complex(dr / n, di / n);
  return out;
}

// (R_l + R_d) / R - 1: free of the trivial root at R = 0.
Complex scaled_residual(const Ensemble& e, double R, double Delta) {
  const auto c = contributions(e, R, Delta);
  return (c.locked + c.drift) / R - 1.0;
}

struct NewtonResult {
  double R;
  double Delta;
  double g_norm;
  bool converged;
};

NewtonResult damped_newton(const Ensemble& e, double R, double Delta, double tol, int max_iter) {
  Complex g = scaled_residual(e, R, Delta);
  double norm = std::abs(g);
  for (int it = 0; it < max_iter; ++it) {
    if (R * norm < tol) return {R, Delta, norm, true};
    const double hR = 1e-7 * std::max(R, 1e-3);
    const double hD = 1e-8 * std::max(1.0, std::abs(Delta));
    const Complex gR = (scaled_residual(e, R + hR, Delta) - g) / hR;
    const Complex gD = (scaled_residual(e, R, Delta + hD) - g) / hD;
    const double det = gR.real() * gD.imag() - gD.real() * gR.imag();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
    const double stepR = -(g.real() * gD.imag() - gD.real() * g.imag()) / det;
    const double stepD = -(gR.real() * g.imag() - g.real() * gR.imag()) / det;
    bool accepted = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      const double Rn = R + t * stepR;
      const double Dn = Delta + t * stepD;
      if (!(Rn > 0.0)) continue;
      const Complex gn = scaled_residual(e, Rn, Dn);
      const double nn = std::abs(gn);
      if (nn < norm * (1.0 - 1e-4 * t) || Rn * nn < tol) {
        R = Rn;
        Delta = Dn;
        g = gn;
        norm = nn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return {R, Delta, norm, R * norm < tol};
}

}  // namespace

double amplitude_cubic(double u, double K, double R_tilde, double Delta, const ModelParams& params) {
  const auto L = local(K, Delta, params);
  const double kr = L.Ke * R_tilde;
  return cubic(u, L.m, L.dp, kr * kr);
}

AmplitudeRoot solve_amplitude(double K, double R_tilde, double Delta, const ModelParams& params) {
  require_inputs(K, R_tilde);
  return root_for(local(K, Delta, params), R_tilde);
}

double incoherent_amplitude(double K, const ModelParams& params) {
  return std::sqrt(std::max(0.0, local(K, 0.0, params).m));
}

bool locking_condition(double K, double r_star, double R_tilde, double Delta, const ModelParams& params) {
  const auto L = local(K, Delta, params);
  return L.Ke * R_tilde > std::abs(L.dp) * r_star;
}

std::optional<double> locked_phase(double K, double r_star, double R_tilde, double Delta, const ModelParams& params) {
  if (!locking_condition(K, r_star, R_tilde, Delta, params)) return std::nullopt;
  const auto L = local(K, Delta, params);
  return std::asin(L.dp * r_star / (L.Ke * R_tilde)) - params.beta;
}

double phase_slope(double K, double r_star, double phi_star, double R_tilde, double Delta, const ModelParams& params) {
  const double Ke = params.S * K;
  return -params.S * Delta * r_star / (Ke * Ke * R_tilde * std::cos(phi_star + params.beta));
}

double amplitude_slope_partial(double K, double phi_star, double R_tilde, double Delta, const ModelParams& params) {
  const auto L = local(K, Delta, params);
  return params.S * Delta * R_tilde * std::sin(phi_star + params.beta) / (L.dp * L.dp);
}

double amplitude_slope_total(double K, double R_tilde, double Delta, const ModelParams& params) {
  require_inputs(K, R_tilde);
  const auto L = local(K, Delta, params);
  const auto root = root_for(L, R_tilde);
  if (!root.locked()) return kNaN;
  const double u = root.r * root.r;
  const double dm = -params.d0 * std::cos(params.alpha);
  const double ddp = params.d0 * std::sin(params.alpha);
  const double p_K = u * (2.0 * (L.m - u) * dm + 2.0 * L.dp * ddp) - 2.0 * L.Ke * R_tilde * R_tilde;
  const double p_u = cubic_derivative(u, L.m, L.dp);
  return params.S * (-p_K / p_u) / (2.0 * root.r);
}

int phi_slope_sign(double Delta) { return -sgn(Delta, 1e-9); }

RSlopeSign r_slope_sign(double Delta, double phi_star, double beta) {
  const double psi = phi_star + beta;
  RSlopeSign out;
  out.contradiction = !(std::abs(psi) < kPi / 2);
  out.sign = sgn(Delta, 1e-9) * sgn(psi, 1e-12);
  return out;
}

std::vector<OscillatorPrediction> predict_profile(double R_tilde, double Delta, const ModelParams& params,
                                                  const CouplingSet& couplings) {
  std::vector<OscillatorPrediction> out;
  out.reserve(couplings.size());
  for (const double K : couplings.values()) {
    const auto root = solve_amplitude(K, R_tilde, Delta, params);
    OscillatorPrediction p{K, root.r, 0.0, false, root.kind};
    if (root.locked()) {
      if (const auto phi = locked_phase(K, root.r, R_tilde, Delta, params)) {
        p.phi = *phi;
        p.locked = true;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::vector<bool> locking_range(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings) {
  const auto profile = predict_profile(R_tilde, Delta, params, couplings);
  std::vector<bool> out(profile.size());
  for (std::size_t j = 0; j < profile.size(); ++j) out[j] = profile[j].locked;
  return out;
}

Complex locked_contribution(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings) {
  Complex sum(0.0, 0.0);
  for (const auto& p : predict_profile(R_tilde, Delta, params, couplings)) {
    if (p.locked) sum += std::polar(p.r, p.phi);
  }
  return sum / static_cast<double>(couplings.size());
}

Complex locked_contribution_integrand(double R_tilde, double Delta, const ModelParams& params,
                                      const CouplingSet& couplings) {
  Complex sum(0.0, 0.0);
  for (const auto& p : predict_profile(R_tilde, Delta, params, couplings)) {
    if (!p.locked) continue;
    const auto L = local(p.K, Delta, params);
    const double kr = L.Ke * R_tilde;
    const double root = std::sqrt(std::max(0.0, kr * kr - L.dp * L.dp * p.r * p.r));
    sum += p.r * Complex(root, L.dp * p.r) / kr;
  }
  return std::polar(1.0, -params.beta) * sum / static_cast<double>(couplings.size());
}

DriftContribution drift_contribution(double R_tilde, double Delta, const ModelParams& params,
                                     const CouplingSet& couplings) {
  params.validate();
  Ensemble e(params, couplings);
  const auto c = contributions(e, R_tilde, Delta);
  return {c.drift, c.excluded};
}

Complex self_consistency_residual(double R_tilde, double Delta, const ModelParams& params,
                                  const CouplingSet& couplings) {
  Ensemble e(params, couplings);
  const auto c = contributions(e, R_tilde, Delta);
  return c.locked + c.drift - R_tilde;
}

SelfConsistentSolution solve_self_consistency(const ModelParams& params, const CouplingSet& couplings,
                                              const SolverOptions& options) {
  if (couplings.empty()) throw ConfigError("coupling set is empty");
  Ensemble e(params, couplings);
  const double tol = options.tolerance;

  std::vector<NewtonResult> results;
  if (options.init && options.init->first > 0.0 && std::isfinite(options.init->second)) {
    const auto r = damped_newton(e, options.init->first, options.init->second, tol, options.max_iterations);
    if (r.converged) {
      return {r.R, r.Delta, true, r.R * r.g_norm, false, "newton from supplied start"};
    }
    results.push_back(r);
  }

  // Coarse scan: R uniform on (0, 1.5 sqrt(lambda)], Delta sinh-spaced on [-2, 2].
  constexpr int nR = 24;
  constexpr int nD = 61;
  constexpr double dScale = 2e-3;
  const double r_top = 1.5 * std::sqrt(params.lambda);
  const double s_max = std::asinh(2.0 / dScale);
  std::array<double, nR> Rs{};
  std::array<double, nD> Ds{};
  for (int i = 0; i < nR; ++i) Rs[i] = r_top * (i + 1) / nR;
  for (int k = 0; k < nD; ++k) Ds[k] = dScale * std::sinh(-s_max + 2.0 * s_max * k / (nD - 1));
  std::vector<double> grid(nR * nD);
  for (int i = 0; i < nR; ++i) {
    for (int k = 0; k < nD; ++k) grid[i * nD + k] = std::abs(scaled_residual(e, Rs[i], Ds[k]));
  }
  std::vector<int> minima;
  for (int i = 0; i < nR; ++i) {
    for (int k = 0; k < nD; ++k) {
      const double v = grid[i * nD + k];
      bool is_min = std::isfinite(v);
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dk = -1; dk <= 1 && is_min; ++dk) {
          const int ii = i + di;
          const int kk = k + dk;
          if ((di == 0 && dk == 0) || ii < 0 || ii >= nR || kk < 0 || kk >= nD) continue;
          if (grid[ii * nD + kk] < v) is_min = false;
        }
      }
      if (is_min) minima.push_back(i * nD + k);
    }
  }
  std::sort(minima.begin(), minima.end(), [&](int a, int b) { return grid[a] < grid[b]; });
  if (minima.size() > 6) minima.resize(6);
  for (const int idx : minima) {
    results.push_back(damped_newton(e, Rs[idx / nD], Ds[idx % nD], tol, options.max_iterations));
  }

  const NewtonResult* best_converged = nullptr;
  const NewtonResult* best_any = nullptr;
  for (const auto& r : results) {
    if (r.converged && (!best_converged || r.R > best_converged->R)) best_converged = &r;
    if (!best_any || r.g_norm < best_any->g_norm) best_any = &r;
  }
  if (best_converged) {
    return {best_converged->R, best_converged->Delta, true, best_converged->R * best_converged->g_norm, false,
            "newton from grid scan"};
  }
  constexpr double kNearMiss = 0.05;
  if (best_any && best_any->g_norm < kNearMiss) {
    return {best_any->R, best_any->Delta, false, best_any->R * best_any->g_norm, false,
            "no root to tolerance; best point reported"};
  }
  return {0.0, kNaN, true, 0.0, true, "incoherent branch: no nontrivial root"};
}

std::vector<KInterval> locked_intervals(double R_tilde, double Delta, const ModelParams& params, double k_lo,
                                        double k_hi, std::size_t samples) {
  std::vector<KInterval> out;
  if (!(R_tilde > 0.0) || !(k_hi >= k_lo)) return out;
  // Positive exactly when the amplitude cubic has a stable root.
  const auto margin = [&](double K) {
    const auto L = local(K, Delta, params);
    const double kr = L.Ke * R_tilde;
    return kr * kr - std::max(L.m, 0.0) * L.dp * L.dp;
  };
  const auto edge = [&](double a, double b) {
    const bool a_locked = margin(a) > 0.0;
    for (int it = 0; it < 100 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if ((margin(mid) > 0.0) == a_locked) {
        a = mid;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  };
  samples = std::max<std::size_t>(samples, 2);
  double prev_k = k_lo;
  bool prev = margin(k_lo) > 0.0;
  double start = k_lo;
  for (std::size_t i = 1; i < samples; ++i) {
    const double k = k_lo + (k_hi - k_lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    const bool cur = margin(k) > 0.0;
    if (cur != prev) {
      const double x = edge(prev_k, k);
      if (cur) {
        start = x;
      } else {
        out.push_back({start, x});
      }
    }
    prev = cur;
    prev_k = k;
  }
  if (prev) out.push_back({start, k_hi});
  return out;
}

std::string to_string(MajorState major) {
  switch (major) {
    case MajorState::S1: return "S1";
    case MajorState::S2: return "S2";
    case MajorState::S3: return "S3";
    case MajorState::S4: return "S4";
  }
  return "?";
}

std::string to_string(LockPattern pattern) {
  switch (pattern) {
    case LockPattern::l0: return "l0";
    case LockPattern::l_plus: return "l+";
    case LockPattern::l_minus: return "l-";
    case LockPattern::dl_plus: return "dl+";
    case LockPattern::dl_minus: return "dl-";
    case LockPattern::l_plus_d: return "l+d";
    case LockPattern::l_minus_d: return "l-d";
    case LockPattern::dl_plus_d: return "dl+d";
    case LockPattern::dl_minus_d: return "dl-d";
    case LockPattern::d: return "d";
  }
  return "?";
}

std::string to_string(AmpSlopeKind kind) {
  switch (kind) {
    case AmpSlopeKind::positive: return "positive";
    case AmpSlopeKind::negative: return "negative";
    case AmpSlopeKind::mixed_pos_to_neg: return "mixed_pos_to_neg";
    case AmpSlopeKind::undefined: return "undefined";
  }
  return "?";
}

std::string StateLabel::name() const { return to_string(major) + "_" + to_string(pattern); }

namespace {

enum class Relation { gt, ge, lt, le };

struct TableRow {
  MajorState major;
  LockPattern pattern;
  std::array<bool, 3> delta_sign;  // allowed for sign(Delta) = -1, 0, +1
  Relation relation;               // R_tilde versus D0
};

using MS = MajorState;
using LP = LockPattern;
constexpr std::array<bool, 3> kNeg{true, false, false};
constexpr std::array<bool, 3> kZero{false, true, false};
constexpr std::array<bool, 3> kPos{false, false, true};
constexpr std::array<bool, 3> kZeroPos{false, true, true};
constexpr std::array<bool, 3> kNegZero{true, true, false};

const std::vector<TableRow>& table_rows(int table) {
  static const std::vector<TableRow> first{
      {MS::S1, LP::l0, kZero, Relation::gt},          {MS::S1, LP::l_plus, kNeg, Relation::ge},
      {MS::S1, LP::dl_plus, kNeg, Relation::ge},      {MS::S2, LP::l_minus, kPos, Relation::gt},
      {MS::S2, LP::dl_minus, kPos, Relation::gt},     {MS::S2, LP::d, kPos, Relation::gt},
      {MS::S3, LP::l_plus, kNeg, Relation::lt},       {MS::S3, LP::l_plus_d, kNeg, Relation::lt},
      {MS::S3, LP::dl_plus, kNeg, Relation::lt},      {MS::S3, LP::dl_plus_d, kNeg, Relation::lt},
      {MS::S3, LP::d, kNeg, Relation::lt},            {MS::S4, LP::d, kZeroPos, Relation::le},
  };
  static const std::vector<TableRow> second{
      {MS::S1, LP::l0, kZero, Relation::gt},          {MS::S1, LP::l_plus, kNeg, Relation::gt},
      {MS::S1, LP::dl_plus, kNeg, Relation::gt},      {MS::S2, LP::l_minus, kPos, Relation::ge},
      {MS::S2, LP::dl_minus, kPos, Relation::ge},     {MS::S2, LP::d, kPos, Relation::ge},
      {MS::S3, LP::l_minus, kPos, Relation::lt},      {MS::S3, LP::l_minus_d, kPos, Relation::lt},
      {MS::S3, LP::dl_minus, kPos, Relation::lt},     {MS::S3, LP::dl_minus_d, kPos, Relation::lt},
      {MS::S3, LP::d, kPos, Relation::lt},            {MS::S4, LP::d, kNegZero, Relation::le},
  };
  return table == 1 ? first : second;
}

bool relation_holds(Relation rel, double R, double D0) {
  constexpr double tol = kStateTieTolerance;
  switch (rel) {
    case Relation::gt: return R > D0 + tol;
    case Relation::ge: return R >= D0 - tol;
    case Relation::lt: return R < D0 - tol;
    case Relation::le: return R <= D0 + tol;
  }
  return false;
}

LockPattern pattern_from(bool lead_drift, bool trail_drift, int slope) {
  if (slope >= 0) {
    if (lead_drift && trail_drift) return LP::dl_plus_d;
    if (lead_drift) return LP::dl_plus;
    if (trail_drift) return LP::l_plus_d;
    return LP::l_plus;
  }
  if (lead_drift && trail_drift) return LP::dl_minus_d;
  if (lead_drift) return LP::dl_minus;
  if (trail_drift) return LP::l_minus_d;
  return LP::l_minus;
}

AmpSlopeKind amp_slope_kind(double R, double Delta, const ModelParams& params,
                            const std::vector<OscillatorPrediction>& profile) {
  std::vector<std::pair<double, double>> locked;
  for (const auto& p : profile) {
    if (p.locked) locked.emplace_back(p.K, amplitude_slope_total(p.K, R, Delta, params));
  }
  std::sort(locked.begin(), locked.end());
  std::vector<double> slopes;
  slopes.reserve(locked.size());
  for (const auto& [K, slope] : locked) slopes.push_back(slope);
  return classify_slopes(slopes);
}

}  // namespace

bool is_legal_state(int table, MajorState major, LockPattern pattern) {
  const auto& rows = table_rows(table);
  return std::any_of(rows.begin(), rows.end(),
                     [&](const TableRow& r) { return r.major == major && r.pattern == pattern; });
}

AmpSlopeKind classify_slopes(std::span<const double> slopes) {
  int state = 0;  // 0 none, 1 positive run, 2 negative after positive, 3 negative only, -1 other
  for (const double slope : slopes) {
    const int s = sgn(slope, 1e-12);
    if (s == 0) continue;
    if (s > 0) {
      state = (state == 0 || state == 1) ? 1 : -1;
    } else {
      state = (state == 1 || state == 2) ? 2 : (state == 0 || state == 3 ? 3 : -1);
    }
    if (state == -1) break;
  }
  switch (state) {
    case 1: return AmpSlopeKind::positive;
    case 2: return AmpSlopeKind::mixed_pos_to_neg;
    case 3: return AmpSlopeKind::negative;
    default: return AmpSlopeKind::undefined;
  }
}

StateLabel label_from_layout(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings,
                             const LockLayout& layout) {
  StateLabel label;
  const double ds = params.d0 * std::sin(params.alpha);
  label.table = ds >= 0.0 ? 1 : 2;
  if (!(R_tilde > 0.0) || !std::isfinite(Delta)) {
    label.major = MS::S4;
    label.pattern = LP::d;
    label.note = "incoherent";
    return label;
  }
  const double d0_min = std::abs(ds) * solve_amplitude(couplings.min(), R_tilde, Delta, params).r;
  const double d0_max = std::abs(ds) * solve_amplitude(couplings.max(), R_tilde, Delta, params).r;
  const int sign_delta = sgn(Delta, kStateTieTolerance);

  LockPattern pattern = LP::d;
  if (layout.any_locked) {
    if (layout.fragmented) {
      label.ambiguous = true;
      label.note = "locked set is not a single interval";
    }
    if (!layout.lead_drift && !layout.trail_drift && std::abs(Delta) < layout.in_phase_tolerance) {
      pattern = LP::l0;
    } else {
      if (sign_delta == 0) {
        label.ambiguous = true;
        label.note = "partially locked with Delta at zero";
      }
      pattern = pattern_from(layout.lead_drift, layout.trail_drift, -sign_delta);
    }
  }

  const auto& rows = table_rows(label.table);
  // l0 stands for Delta = 0 up to the in-phase tolerance.
  const int row_sign = pattern == LP::l0 ? 0 : sign_delta;
  const auto sign_ok = [&](const TableRow& r) { return r.delta_sign[static_cast<std::size_t>(row_sign + 1)]; };
  const std::array<std::function<bool(const TableRow&)>, 5> passes{
      [&](const TableRow& r) {
        return sign_ok(r) && relation_holds(r.relation, R_tilde, d0_min) && relation_holds(r.relation, R_tilde, d0_max);
      },
      [&](const TableRow& r) { return sign_ok(r) && relation_holds(r.relation, R_tilde, d0_max); },
      [&](const TableRow& r) { return sign_ok(r) && relation_holds(r.relation, R_tilde, d0_min); },
      [&](const TableRow& r) { return sign_ok(r); },
      [&](const TableRow&) { return true; },
  };
  const TableRow* chosen = nullptr;
  bool clean = false;
  for (std::size_t pass = 0; pass < passes.size() && !chosen; ++pass) {
    for (const auto& r : rows) {
      if (r.pattern == pattern && passes[pass](r)) {
        chosen = &r;
        clean = pass == 0;
        break;
      }
    }
  }
  if (chosen) {
    label.major = chosen->major;
    label.pattern = chosen->pattern;
    if (!clean) {
      label.ambiguous = true;
      if (label.note.empty()) label.note = "R_tilde straddles D0 or sign(Delta) disagrees with the pattern";
    }
  } else {
    label.major = MS::S4;
    label.pattern = LP::d;
    label.ambiguous = true;
    label.note = "pattern " + to_string(pattern) + " is not a row of table " + std::to_string(label.table);
  }
  return label;
}

StateLabel classify_state(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings) {
  LockLayout layout;
  if (R_tilde > 0.0 && std::isfinite(Delta)) {
    const double k_min = couplings.min();
    const double k_max = couplings.max();
    const double span = std::max(k_max - k_min, 1e-300);
    const auto intervals = locked_intervals(R_tilde, Delta, params, k_min, k_max);
    layout.any_locked = !intervals.empty();
    if (layout.any_locked) {
      layout.fragmented = intervals.size() > 1;
      layout.lead_drift = intervals.front().lo > k_min + 1e-12 * span;
      layout.trail_drift = intervals.back().hi < k_max - 1e-12 * span;
    }
  }
  auto label = label_from_layout(R_tilde, Delta, params, couplings, layout);
  if (R_tilde > 0.0 && std::isfinite(Delta)) {
    label.amp_slope = amp_slope_kind(R_tilde, Delta, params, predict_profile(R_tilde, Delta, params, couplings));
  }
  return label;
}

TheoryPoint evaluate_theory(const ModelParams& params, const CouplingSet& couplings, const SolverOptions& options) {
  params.validate();
  TheoryPoint point;
  point.solution = solve_self_consistency(params, couplings, options);
  const auto& sol = point.solution;
  point.label = classify_state(sol.R_tilde, sol.Delta, params, couplings);
  if (sol.incoherent) {
    for (const double K : couplings.values()) {
      const auto root = solve_amplitude(K, 0.0, 0.0, params);
      point.profile.push_back({K, root.r, 0.0, false, root.kind});
    }
    return point;
  }
  const auto intervals = locked_intervals(sol.R_tilde, sol.Delta, params, couplings.min(), couplings.max());
  if (!intervals.empty()) {
    point.K_lock_lo = intervals.front().lo;
    point.K_lock_hi = intervals.back().hi;
  }
  point.profile = predict_profile(sol.R_tilde, sol.Delta, params, couplings);
  return point;
}

std::string theory_json(const TheoryPoint& point) {
  using nlohmann::json;
  const auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  const auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  const auto& s = point.solution;
  std::size_t locked = 0;
  for (const auto& p : point.profile) locked += p.locked ? 1 : 0;
  json j{
      {"R_tilde", num(s.R_tilde)},
      {"Delta", num(s.Delta)},
      {"converged", s.converged},
      {"residual", num(s.residual)},
      {"state_label", point.label.name()},
      {"K_lock_lo", opt(point.K_lock_lo)},
      {"K_lock_hi", opt(point.K_lock_hi)},
      {"incoherent", s.incoherent},
      {"branch_note", s.branch_note},
      {"label_ambiguous", point.label.ambiguous},
      {"label_note", point.label.note},
      {"amp_slope", to_string(point.label.amp_slope)},
      {"table", point.label.table},
      {"locked_fraction", point.profile.empty() ? 0.0 : static_cast<double>(locked) / point.profile.size()},
  };
  return j.dump(2);
}

void write_prediction_csv(std::ostream& out, const std::vector<OscillatorPrediction>& profile) {
  std::vector<const OscillatorPrediction*> sorted;
  sorted.reserve(profile.size());
  for (const auto& p : profile) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a->K < b->K; });
  out << "K,phi_star_pred,r_star_pred,locked_pred\n";
  out.precision(17);
  for (const auto* p : sorted) {
    out << p->K << ',';
    if (p->locked) out << p->phi;
    out << ',' << p->r << ',' << (p->locked ? 1 : 0) << '\n';
  }
}

}  // namespace slnet
