#include "slnet/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "slnet/error.hpp"
#include "slnet/rng.hpp"

#ifndef SLNET_VERSION
#define SLNET_VERSION "0.0.0"
#endif

namespace slnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Measured Delta below this with full locking counts as in-phase.
constexpr double kMeasuredInPhase = 1e-3;
constexpr double kDriftFraction = 0.01;

std::string format_double(double x) {
  if (!std::isfinite(x)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_field(const std::string& s, std::size_t row, std::size_t col) {
  if (s.empty()) return kNaN;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", row, col);
  }
  if (used != s.size()) throw ParseError("trailing characters in '" + s + "'", row, col);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  double s = 0.0;
  for (const double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// (Ke R)^2 - max(m, 0) Delta'^2: positive where the oscillator locks.
double lock_margin(double K, double R_tilde, double Delta, const ModelParams& p) {
  const double Ke = p.S * K;
  const double m = p.lambda - Ke * p.d0 * std::cos(p.alpha);
  const double dp = Delta + Ke * p.d0 * std::sin(p.alpha);
  const double kr = Ke * R_tilde;
  return kr * kr - std::max(m, 0.0) * dp * dp;
}

CellRecord failed_cell(double beta, double d0, std::string error) {
  CellRecord c;
  c.beta = beta;
  c.d0 = d0;
  c.R_tilde = c.Delta = c.amp_slope = c.inflection_frac = c.locked_fraction = kNaN;
  c.ok = false;
  c.error = std::move(error);
  return c;
}

}  // namespace

CouplingSource::CouplingSource(CouplingSet couplings, std::string description)
    : couplings_(std::move(couplings)), description_(std::move(description)) {}

CouplingSource::CouplingSource(NetworkGraph network, std::string description) : description_(std::move(description)) {
  const double n = static_cast<double>(network.size());
  std::vector<double> K(network.size());
  for (std::size_t j = 0; j < network.size(); ++j) {
    if (network.degree(j) == 0) throw ConfigError("network node " + std::to_string(j) + " has no inputs");
    K[j] = static_cast<double>(network.degree(j)) / n;
  }
  couplings_ = CouplingSet(std::move(K));
  network_ = std::move(network);
}

const NetworkGraph& CouplingSource::network() const {
  if (!network_) throw ConfigError("coupling source has no network");
  return *network_;
}

VectorField CouplingSource::field(const ModelParams& params) const {
  if (params.N != size()) {
    throw DimensionError("params.N = " + std::to_string(params.N) + " but the source has " + std::to_string(size()) +
                         " oscillators");
  }
  if (network_) return NetworkField(params, *network_);
  return MeanFieldField(params, couplings_);
}

StateLabel classify_measured(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings,
                             const LockPartition& partition, const AmplitudeSlope& amp) {
  if (partition.size() != couplings.size()) throw DimensionError("partition and coupling set differ in size");
  LockLayout layout;
  layout.in_phase_tolerance = kMeasuredInPhase;
  if (!partition.locked.empty()) {
    layout.any_locked = true;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto j : partition.locked) {
      lo = std::min(lo, couplings[j]);
      hi = std::max(hi, couplings[j]);
    }
    for (const auto j : partition.drifting) {
      const double K = couplings[j];
      if (K < lo) {
        layout.lead_drift = true;
      } else if (K > hi) {
        layout.trail_drift = true;
      } else {
        layout.fragmented = true;
      }
    }
  }
  auto label = label_from_layout(R_tilde, Delta, params, couplings, layout);
  if (amp.defined) label.amp_slope = classify_slopes(amp.slopes);
  return label;
}

SeedResult simulate_seed(const ModelParams& params, const CouplingSource& source, std::uint64_t seed,
                         const IntegrationPlan& plan, const MeasureOptions& options) {
  SeedResult res;
  res.seed = seed;
  try {
    params.validate();
    IntegrationPlan p = plan;
    p.seed = seed;
    auto traj = integrate(init_state(params, seed), source.field(params), p);
    traj.source = source.description();
    const auto series = order_parameter_series(traj);
    res.R_tilde = series.mean_R();
    res.frequency = estimate_omega(series);
    const auto& K = source.couplings();
    if (res.frequency.defined) {
      res.partition = detect_locked(traj, res.frequency.Omega, options.lock_tolerance);
    } else {
      // No population phase to lock to.
      res.partition = detect_locked(traj, params.omega, options.lock_tolerance);
      res.partition.locked.clear();
      res.partition.drifting.resize(res.partition.size());
      for (std::size_t j = 0; j < res.partition.size(); ++j) res.partition.drifting[j] = j;
      res.partition.is_locked.assign(res.partition.size(), false);
    }
    const auto profile = stationary_profiles(res.partition, K);
    res.amp = amplitude_slope(profile, K.min(), K.max(), options.slope_bins);
    const double Delta = res.frequency.defined ? res.frequency.Delta : kNaN;
    const double R = res.frequency.defined ? res.R_tilde : 0.0;
    res.label = classify_measured(R, Delta, params, K, res.partition, res.amp);
    if (options.keep_trajectory) res.trajectory = std::move(traj);
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

PointResult run_point(const ModelParams& params, const CouplingSource& source, std::span<const std::uint64_t> seeds,
                      const IntegrationPlan& plan, const MeasureOptions& options) {
  if (seeds.empty()) throw ConfigError("run_point needs at least one seed");
  PointResult out;
  out.params = params;
  out.seeds.reserve(seeds.size());
  for (const auto s : seeds) out.seeds.push_back(simulate_seed(params, source, s, plan, options));

  std::string first_error;
  for (const auto& r : out.seeds) {
    if (!r.ok) {
      out.failed_seeds.push_back(r.seed);
      if (first_error.empty()) first_error = r.error;
    }
  }
  if (!out.failed_seeds.empty()) {
    std::ostringstream msg;
    msg << "seeds failed:";
    for (const auto s : out.failed_seeds) msg << ' ' << s;
    msg << " (" << first_error << ')';
    out.cell = failed_cell(params.beta, params.d0, msg.str());
    return out;
  }

  std::vector<double> R, Delta, slope, locked;
  std::size_t inflections = 0;
  std::map<std::string, std::size_t> votes;
  for (const auto& r : out.seeds) {
    R.push_back(r.R_tilde);
    if (r.frequency.defined) Delta.push_back(r.frequency.Delta);
    if (r.amp.defined) slope.push_back(r.amp.mean_slope);
    if (r.amp.inflection) ++inflections;
    locked.push_back(r.partition.locked_fraction());
    ++votes[r.label.name()];
  }
  auto& c = out.cell;
  c.beta = params.beta;
  c.d0 = params.d0;
  c.R_tilde = mean_of(R);
  c.Delta = mean_of(Delta);
  c.amp_slope = mean_of(slope);
  c.inflection_frac = static_cast<double>(inflections) / static_cast<double>(out.seeds.size());
  c.locked_fraction = mean_of(locked);
  c.fully_drifting = c.locked_fraction < kDriftFraction;
  // Map order makes the lexicographically first label win ties.
  std::size_t best = 0;
  for (const auto& [name, count] : votes) {
    if (count > best) {
      best = count;
      c.state = name;
    }
  }
  c.ok = true;
  return out;
}

TheoryCell run_theory_point(const ModelParams& params, const CouplingSet& couplings,
                            const std::optional<std::pair<double, double>>& init, std::size_t slope_bins) {
  TheoryCell tc;
  SolverOptions opts;
  opts.init = init;
  tc.point = evaluate_theory(params, couplings, opts);
  const auto& sol = tc.point.solution;
  auto& c = tc.cell;
  c.beta = params.beta;
  c.d0 = params.d0;
  c.R_tilde = sol.R_tilde;
  c.Delta = sol.incoherent ? kNaN : sol.Delta;
  c.state = tc.point.label.name();
  c.ok = true;
  if (!sol.converged) c.error = "self-consistency not converged";

  std::vector<ProfilePoint> locked;
  double r_sum = 0.0;
  for (std::size_t j = 0; j < tc.point.profile.size(); ++j) {
    const auto& p = tc.point.profile[j];
    r_sum += p.r;
    if (p.locked) locked.push_back({p.K, p.phi, p.r, j});
  }
  std::sort(locked.begin(), locked.end(), [](const ProfilePoint& a, const ProfilePoint& b) {
    return a.K < b.K || (a.K == b.K && a.index < b.index);
  });
  const double n = static_cast<double>(std::max<std::size_t>(tc.point.profile.size(), 1));
  c.locked_fraction = static_cast<double>(locked.size()) / n;
  c.fully_drifting = c.locked_fraction < kDriftFraction;
  const auto amp = amplitude_slope(locked, couplings.min(), couplings.max(), slope_bins);
  c.amp_slope = amp.defined ? amp.mean_slope : kNaN;
  c.inflection_frac = amp.inflection ? 1.0 : 0.0;

  if (sol.incoherent || !(sol.R_tilde > 0.0)) {
    tc.delta = tc.r_minus_d0 = tc.margin_kmin = tc.margin_kmax = kNaN;
  } else {
    tc.delta = sol.Delta;
    tc.r_minus_d0 = sol.R_tilde - std::abs(params.d0 * std::sin(params.alpha)) * r_sum / n;
    tc.margin_kmin = lock_margin(couplings.min(), sol.R_tilde, sol.Delta, params);
    tc.margin_kmax = lock_margin(couplings.max(), sol.R_tilde, sol.Delta, params);
  }
  return tc;
}

std::string to_string(SweepMode mode) {
  switch (mode) {
    case SweepMode::simulate: return "simulate";
    case SweepMode::theory: return "theory";
    case SweepMode::both: return "both";
  }
  return "unknown";
}

SweepMode parse_sweep_mode(const std::string& name) {
  if (name == "simulate") return SweepMode::simulate;
  if (name == "theory") return SweepMode::theory;
  if (name == "both") return SweepMode::both;
  throw ConfigError("unknown sweep mode '" + name + "' (simulate, theory, both)");
}

double GridAxis::at(std::size_t i) const {
  if (n < 2) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

void SweepSpec::validate() const {
  base.validate();
  if (beta_range.n < 2 || d0_range.n < 2) throw ConfigError("each grid axis needs at least 2 steps");
  const double half_pi = std::numbers::pi / 2;
  for (const double b : {beta_range.lo, beta_range.hi}) {
    if (!std::isfinite(b) || b < 0.0 || b >= half_pi) throw ConfigError("beta range must lie in [0, pi/2)");
  }
  if (!(beta_range.hi >= beta_range.lo)) throw ConfigError("beta range is reversed");
  if (!std::isfinite(d0_range.lo) || !std::isfinite(d0_range.hi) || !(d0_range.hi >= d0_range.lo)) {
    throw ConfigError("d0 range must be finite and increasing");
  }
  if (mode != SweepMode::theory && seeds.empty()) throw ConfigError("simulation sweeps need at least one seed");
  plan.validate();
}

std::size_t SweepGrid::failed_cells() const {
  std::size_t n = 0;
  for (const auto& c : simulated) n += c.ok ? 0 : 1;
  for (const auto& t : theory) n += t.cell.ok ? 0 : 1;
  return n;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t i_beta, std::size_t i_d0, std::size_t rep) {
  return derive_seed(master, {i_beta, i_d0, rep});
}

SweepGrid run_grid(const SweepSpec& spec, const CouplingSource& source) {
  spec.validate();
  SweepGrid grid;
  grid.alpha = spec.base.alpha;
  grid.beta_range = spec.beta_range;
  grid.d0_range = spec.d0_range;
  grid.mode = spec.mode;
  grid.source = source.description();
  grid.seeds = spec.seeds;
  grid.plan = spec.plan;
  grid.base = spec.base;
  grid.base.N = source.size();

  const std::size_t nb = spec.beta_range.n;
  const std::size_t nd = spec.d0_range.n;
  const std::size_t cells = nb * nd;
  const bool sim = spec.mode != SweepMode::theory;
  const bool theo = spec.mode != SweepMode::simulate;
  if (sim) grid.simulated.resize(cells);
  if (theo) grid.theory.resize(cells);

  const auto work = [&](std::size_t idx) {
    const std::size_t ib = idx / nd;
    const std::size_t id = idx % nd;
    ModelParams p = grid.base;
    p.beta = spec.beta_range.at(ib);
    p.d0 = spec.d0_range.at(id);
    std::optional<std::pair<double, double>> init;
    if (sim) {
      std::vector<std::uint64_t> seeds(spec.seeds.size());
      for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = cell_seed(spec.seeds[r], ib, id, r);
      try {
        grid.simulated[idx] = run_point(p, source, seeds, spec.plan, spec.measure).cell;
      } catch (const std::exception& e) {
        grid.simulated[idx] = failed_cell(p.beta, p.d0, e.what());
      }
      const auto& c = grid.simulated[idx];
      if (c.ok && std::isfinite(c.Delta) && c.R_tilde > kIncoherentThreshold) init = std::make_pair(c.R_tilde, c.Delta);
    }
    if (theo) {
      try {
        grid.theory[idx] = run_theory_point(p, source.couplings(), init, spec.measure.slope_bins);
      } catch (const std::exception& e) {
        grid.theory[idx].cell = failed_cell(p.beta, p.d0, e.what());
        grid.theory[idx].delta = grid.theory[idx].r_minus_d0 = kNaN;
        grid.theory[idx].margin_kmin = grid.theory[idx].margin_kmax = kNaN;
      }
    }
  };

  std::size_t workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cells);
  grid.workers = workers;
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  const auto loop = [&] {
    for (std::size_t i = next++; i < cells; i = next++) work(i);
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  }
  grid.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return grid;
}

void write_grid_csv(std::ostream& out, double alpha, std::span<const CellRecord> cells) {
  out << "alpha,beta,d0,R_tilde,Delta,amp_slope,inflection_frac,state,fully_drifting,status\n";
  for (const auto& c : cells) {
    out << format_double(alpha) << ',' << format_double(c.beta) << ',' << format_double(c.d0) << ',';
    if (c.ok) {
      out << format_double(c.R_tilde) << ',' << format_double(c.Delta) << ',' << format_double(c.amp_slope) << ','
          << format_double(c.inflection_frac) << ',' << c.state << ',' << (c.fully_drifting ? 1 : 0) << ",ok\n";
    } else {
      out << ",,,,,,failed\n";
    }
  }
  if (!out) throw Error("failed to write grid CSV");
}

LoadedGrid read_grid_csv(std::istream& in) {
  LoadedGrid g;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError("empty grid CSV", 1, 1);
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "alpha,beta,d0,R_tilde,Delta,amp_slope,inflection_frac,state,fully_drifting,status") {
    throw ParseError("unexpected grid CSV header", 1, 1);
  }
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw ParseError("expected 10 fields, got " + std::to_string(f.size()), row, 1);
    CellRecord c;
    g.alpha.push_back(parse_field(f[0], row, 1));
    c.beta = parse_field(f[1], row, 2);
    c.d0 = parse_field(f[2], row, 3);
    c.R_tilde = parse_field(f[3], row, 4);
    c.Delta = parse_field(f[4], row, 5);
    c.amp_slope = parse_field(f[5], row, 6);
    c.inflection_frac = parse_field(f[6], row, 7);
    c.state = f[7];
    if (f[9] == "ok") {
      c.ok = true;
    } else if (f[9] == "failed") {
      c.ok = false;
    } else {
      throw ParseError("status must be ok or failed", row, 10);
    }
    if (c.ok) {
      if (f[8] != "0" && f[8] != "1") throw ParseError("fully_drifting must be 0 or 1", row, 9);
      c.fully_drifting = f[8] == "1";
    }
    c.locked_fraction = kNaN;
    g.cells.push_back(std::move(c));
  }
  return g;
}

LoadedGrid read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_grid_csv(in);
}

std::string grid_metadata_json(const SweepGrid& grid) {
  using nlohmann::json;
  const auto axis = [](const GridAxis& a) { return json{{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}}; };
  json j{
      {"alpha", grid.alpha},
      {"beta_range", axis(grid.beta_range)},
      {"d0_range", axis(grid.d0_range)},
      {"mode", to_string(grid.mode)},
      {"source", grid.source},
      {"seeds", grid.seeds},
      {"params",
       {{"lambda", grid.base.lambda}, {"omega", grid.base.omega}, {"S", grid.base.S}, {"N", grid.base.N}}},
      {"plan",
       {{"dt", grid.plan.dt},
        {"t_transient", grid.plan.t_transient},
        {"t_measure", grid.plan.t_measure},
        {"record_stride", grid.plan.record_stride}}},
      {"seed_derivation", "derive_seed(seeds[rep], {i_beta, i_d0, rep})"},
      {"rng", kRngAlgorithm},
      {"version", version()},
      {"workers", grid.workers},
      {"wall_seconds", grid.wall_seconds},
      {"failed_cells", grid.failed_cells()},
  };
  return j.dump(2);
}

std::vector<BoundaryPoint> boundary_curves(const SweepGrid& grid) {
  std::vector<BoundaryPoint> out;
  if (grid.theory.empty()) return out;
  const std::size_t nb = grid.beta_range.n;
  const std::size_t nd = grid.d0_range.n;
  struct Indicator {
    const char* id;
    double TheoryCell::*field;
  };
  const Indicator indicators[] = {{"delta_zero", &TheoryCell::delta},
                                  {"R_eq_D0", &TheoryCell::r_minus_d0},
                                  {"lock_edge_kmin", &TheoryCell::margin_kmin},
                                  {"lock_edge_kmax", &TheoryCell::margin_kmax}};
  for (const auto& ind : indicators) {
    const auto value = [&](std::size_t ib, std::size_t id) { return grid.theory[grid.index(ib, id)].*ind.field; };
    const auto crossing = [&](std::size_t ib0, std::size_t id0, std::size_t ib1, std::size_t id1) {
      const double a = value(ib0, id0);
      const double b = value(ib1, id1);
      if (!std::isfinite(a) || !std::isfinite(b)) return;
      if (a == 0.0 && b == 0.0) return;
      if ((a < 0.0) == (b < 0.0) && a != 0.0 && b != 0.0) return;
      if (b == 0.0) return;  // reported by the next pair
      const double t = a / (a - b);
      const double beta0 = grid.beta_range.at(ib0), beta1 = grid.beta_range.at(ib1);
      const double d00 = grid.d0_range.at(id0), d01 = grid.d0_range.at(id1);
      out.push_back({ind.id, beta0 + t * (beta1 - beta0), d00 + t * (d01 - d00)});
    };
    for (std::size_t ib = 0; ib < nb; ++ib) {
      for (std::size_t id = 0; id < nd; ++id) {
        if (id + 1 < nd) crossing(ib, id, ib, id + 1);
        if (ib + 1 < nb) crossing(ib, id, ib + 1, id);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const BoundaryPoint& a, const BoundaryPoint& b) {
    if (a.curve_id != b.curve_id) return a.curve_id < b.curve_id;
    if (a.beta != b.beta) return a.beta < b.beta;
    return a.d0 < b.d0;
  });
  return out;
}

void write_boundary_csv(std::ostream& out, std::span<const BoundaryPoint> points) {
  out << "curve_id,beta,d0\n";
  for (const auto& p : points) out << p.curve_id << ',' << format_double(p.beta) << ',' << format_double(p.d0) << '\n';
  if (!out) throw Error("failed to write boundary CSV");
}

std::vector<std::filesystem::path> export_grid(const SweepGrid& grid, const std::filesystem::path& dir,
                                               const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  const auto open = [&](const std::string& name) {
    const auto path = dir / (stem + name);
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    written.push_back(path);
    return f;
  };
  const auto check = [&](std::ofstream& f) {
    f.flush();
    if (!f) throw Error("write failed: " + written.back().string());
  };
  if (!grid.simulated.empty()) {
    auto f = open("_sim.csv");
    write_grid_csv(f, grid.alpha, grid.simulated);
    check(f);
  }
  if (!grid.theory.empty()) {
    std::vector<CellRecord> cells;
    cells.reserve(grid.theory.size());
    for (const auto& t : grid.theory) cells.push_back(t.cell);
    auto f = open("_theory.csv");
    write_grid_csv(f, grid.alpha, cells);
    check(f);
    auto b = open("_boundaries.csv");
    write_boundary_csv(b, boundary_curves(grid));
    check(b);
  }
  auto m = open("_meta.json");
  m << grid_metadata_json(grid) << '\n';
  check(m);
  return written;
}

const char* version() { return SLNET_VERSION; }

}  // namespace slnet
