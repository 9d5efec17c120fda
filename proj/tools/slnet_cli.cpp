// slnet: generate coupling sets and graphs, simulate points, solve the
// self-consistency equations, sweep (beta, d0) grids and relabel summaries.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slnet/config.hpp"
#include "slnet/error.hpp"
#include "slnet/networks.hpp"
#include "slnet/observables.hpp"
#include "slnet/sweep.hpp"
#include "slnet/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3;

// Flags that map one-to-one onto configuration keys.
struct KeyFlag {
  const char* flag;
  const char* key;
  const char* help;
};

const std::vector<KeyFlag> kModelFlags = {
    {"--lambda", "lambda", "growth rate lambda"},
    {"--omega", "omega", "intrinsic frequency (radians or e.g. 1pi)"},
    {"--S", "S", "global coupling scale S"},
    {"--alpha", "alpha", "self-term argument alpha (radians or e.g. 0.25pi)"},
    {"--beta", "beta", "phase delay beta (radians or e.g. 0.2pi)"},
    {"--d0", "d0", "self-term magnitude d0"},
    {"--n", "N", "number of oscillators for sampled coupling sets"},
};

const std::vector<KeyFlag> kDistFlags = {
    {"--dist", "dist", "coupling distribution: gaussian, powerlaw, weibull, file"},
    {"--mean", "mean", "mean coupling strength"},
    {"--sd", "sd", "standard deviation (gaussian)"},
    {"--gamma", "gamma", "power-law exponent"},
    {"--shape", "shape", "weibull shape"},
    {"--k-min", "k_min", "lower coupling bound"},
    {"--k-max", "k_max", "upper coupling bound"},
    {"--couplings", "couplings", "coupling CSV (one K per line); implies --dist file"},
    {"--dist-seed", "dist_seed", "seed for sampling couplings and building graphs"},
    {"--network", "network", "adjacency file (dense 0/1 matrix or src,dst edge list)"},
    {"--adjacency-format", "adjacency_format", "auto, dense or edges"},
};

const std::vector<KeyFlag> kRunFlags = {
    {"--dt", "dt", "RK4 step"},
    {"--t-transient", "t_transient", "discarded warm-up time"},
    {"--t-measure", "t_measure", "measurement window"},
    {"--record-stride", "record_stride", "keep every n-th step in the window"},
    {"--seed", "master_seed", "master seed (OSC_SEED overrides the config file)"},
    {"--seeds", "n_seeds", "number of random initial conditions"},
    {"--workers", "workers", "worker threads for sweeps (0: all cores)"},
    {"--lock-tol", "lock_tolerance", "phase-spread tolerance for locking, radians"},
    {"--bins", "slope_bins", "number of K bins for profile slopes"},
    {"--out", "output_dir", "output directory"},
};

const std::vector<KeyFlag> kGridFlags = {
    {"--beta-lo", "beta_lo", "first beta of the grid"},
    {"--beta-hi", "beta_hi", "last beta of the grid"},
    {"--beta-n", "beta_n", "number of beta values"},
    {"--d0-lo", "d0_lo", "first d0 of the grid"},
    {"--d0-hi", "d0_hi", "last d0 of the grid"},
    {"--d0-n", "d0_n", "number of d0 values"},
    {"--mode", "mode", "simulate, theory or both"},
};

// Collects raw option strings and applies them on top of a config file.
class Settings {
 public:
  void add(CLI::App* app, const std::vector<KeyFlag>& flags) {
    for (const auto& f : flags) app->add_option(f.flag, values_[f.key], f.help);
  }
  void add_flag(CLI::App* app, const char* flag, const char* key, const char* help) {
    app->add_flag(flag, flags_[key], help);
  }
  void add_config(CLI::App* app) {
    app->add_option("--config", config_path_, "key = value configuration file")->check(CLI::ExistingFile);
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path_.empty() ? RunConfig{} : read_config(fs::path(config_path_));
    if (const char* env = std::getenv("OSC_SEED")) cfg.set("master_seed", env);
    for (const auto& [key, value] : values_) {
      if (!value.empty()) cfg.set(key, value);
    }
    for (const auto& [key, on] : flags_) {
      if (on) cfg.set(key, "true");
    }
    return cfg;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> flags_;
  std::string config_path_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

void write_resolved(const RunConfig& cfg) {
  ensure_dir(cfg.output_dir);
  auto f = open_out(cfg.output_dir / "config.resolved");
  write_config(f, cfg);
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json params_json(const ModelParams& p) {
  return {{"lambda", p.lambda}, {"omega", p.omega}, {"S", p.S}, {"alpha", p.alpha},
          {"beta", p.beta},     {"d0", p.d0},       {"N", p.N}};
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.lambda = j.at("lambda").get<double>();
  p.omega = j.at("omega").get<double>();
  p.S = j.at("S").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.d0 = j.at("d0").get<double>();
  p.N = j.at("N").get<std::size_t>();
  return p;
}

void print_stats(const CouplingSet& K) {
  std::cout << "n=" << K.size() << " mean=" << K.mean() << " sd=" << K.sd() << " min=" << K.min()
            << " max=" << K.max() << '\n';
}

CouplingSet resolve_couplings(RunConfig& cfg) {
  if (!cfg.dist.path.empty()) cfg.dist.kind = DistributionKind::file;
  if (cfg.dist.kind != DistributionKind::file && cfg.params.N < 2) {
    throw ConfigError("no coupling input: pass --couplings, --network, or --dist with --n >= 2");
  }
  auto K = sample_couplings(cfg.dist, cfg.params.N);
  cfg.params.N = K.size();
  return K;
}

// Network file, degree-sequence graph from couplings, or plain couplings.
CouplingSource resolve_source(RunConfig& cfg) {
  if (!cfg.network.empty()) {
    AdjacencyOptions opts;
    opts.format = cfg.adjacency_format;
    opts.symmetrize = cfg.symmetrize;
    auto loaded = load_adjacency(cfg.network, opts);
    if (!loaded.removed.empty() || loaded.self_loops_dropped) {
      std::cerr << "network: removed " << loaded.removed.size() << " nodes without inputs, dropped "
                << loaded.self_loops_dropped << " self-loops\n";
    }
    cfg.params.N = loaded.graph.size();
    return CouplingSource(std::move(loaded.graph), cfg.network.filename().string());
  }
  auto K = resolve_couplings(cfg);
  const std::string desc =
      cfg.dist.kind == DistributionKind::file ? cfg.dist.path.filename().string() : to_string(cfg.dist.kind);
  if (cfg.graph_from_couplings) {
    auto graph = generate_graph_from_degrees(degrees_from_couplings(K), cfg.dist.seed);
    cfg.params.N = graph.size();
    return CouplingSource(std::move(graph), desc + " degree graph");
  }
  return CouplingSource(std::move(K), desc);
}

json layout_json(const SeedResult& r, const CouplingSet& K) {
  double lo = NAN, hi = NAN;
  bool lead = false, trail = false, frag = false;
  if (!r.partition.locked.empty()) {
    lo = INFINITY;
    hi = -INFINITY;
    for (const auto j : r.partition.locked) {
      lo = std::min(lo, K[j]);
      hi = std::max(hi, K[j]);
    }
    for (const auto j : r.partition.drifting) {
      if (K[j] < lo) lead = true;
      else if (K[j] > hi) trail = true;
      else frag = true;
    }
  }
  return {{"any_locked", !r.partition.locked.empty()},
          {"lead_drift", lead},
          {"trail_drift", trail},
          {"fragmented", frag},
          {"K_lock_lo", num(lo)},
          {"K_lock_hi", num(hi)}};
}

json seed_json(const SeedResult& r, const CouplingSet& K) {
  if (!r.ok) return {{"seed", r.seed}, {"ok", false}, {"error", r.error}};
  return {{"seed", r.seed},
          {"ok", true},
          {"R_tilde", r.R_tilde},
          {"Omega", r.frequency.defined ? json(r.frequency.Omega) : json(nullptr)},
          {"Delta", r.frequency.defined ? json(r.frequency.Delta) : json(nullptr)},
          {"locked_fraction", r.partition.locked_fraction()},
          {"state_label", r.label.name()},
          {"label_ambiguous", r.label.ambiguous},
          {"amp_slope_mean", r.amp.defined ? json(r.amp.mean_slope) : json(nullptr)},
          {"amp_slopes", r.amp.slopes},
          {"inflection", r.amp.inflection},
          {"layout", layout_json(r, K)}};
}

int cmd_gen(const Settings& s, bool graph, const std::string& from_couplings) {
  RunConfig cfg = s.resolve();
  if (!from_couplings.empty()) {
    cfg.dist.path = from_couplings;
    graph = true;
  }
  write_resolved(cfg);
  auto K = resolve_couplings(cfg);
  print_stats(K);
  if (from_couplings.empty()) {
    auto f = open_out(cfg.output_dir / "couplings.csv");
    write_couplings_csv(f, K);
    std::cout << "wrote " << (cfg.output_dir / "couplings.csv").string() << '\n';
  }
  if (graph) {
    const auto net = generate_graph_from_degrees(degrees_from_couplings(K), cfg.dist.seed);
    auto f = open_out(cfg.output_dir / "edges.csv");
    write_edge_list(f, net);
    std::cout << "graph: nodes=" << net.size() << " edges=" << net.edge_count() / 2 << '\n';
    std::cout << "wrote " << (cfg.output_dir / "edges.csv").string() << '\n';
  }
  return kExitOk;
}

int cmd_simulate(const Settings& s) {
  RunConfig cfg = s.resolve();
  const auto source = resolve_source(cfg);
  cfg.params.validate();
  write_resolved(cfg);
  const auto seeds = cfg.seeds();
  auto measure = cfg.measure();
  auto point = run_point(cfg.params, source, seeds, cfg.plan, measure);
  const auto& K = source.couplings();
  const auto& dir = cfg.output_dir;

  {
    auto f = open_out(dir / "couplings.csv");
    write_couplings_csv(f, K);
  }
  const auto* first = point.seeds.empty() || !point.seeds.front().ok ? nullptr : &point.seeds.front();
  if (first) {
    auto f = open_out(dir / "profiles.csv");
    write_profile_csv(f, first->partition, K);
    if (first->trajectory) {
      auto t = open_out(dir / "trajectory.csv");
      write_trajectory_csv(t, *first->trajectory);
    }
  }

  const auto& c = point.cell;
  json summary{
      {"params", params_json(cfg.params)},
      {"source", source.description()},
      {"K_min", K.min()},
      {"K_max", K.max()},
      {"K_mean", K.mean()},
      {"ok", c.ok},
      {"error", c.error},
      {"R_tilde", num(c.R_tilde)},
      {"Delta", num(c.Delta)},
      {"amp_slope_mean", num(c.amp_slope)},
      {"inflection_frac", num(c.inflection_frac)},
      {"locked_fraction", num(c.locked_fraction)},
      {"state_label", c.state},
      {"fully_drifting", c.fully_drifting},
      {"seeds", json::array()},
  };
  for (const auto& r : point.seeds) summary["seeds"].push_back(seed_json(r, K));
  // The layout of the first seed carrying the modal label stands for the point.
  for (const auto& r : point.seeds) {
    if (r.ok && r.label.name() == c.state) {
      summary["layout"] = layout_json(r, K);
      summary["amp_slopes"] = r.amp.slopes;
      break;
    }
  }
  if (cfg.theory) {
    std::optional<std::pair<double, double>> init;
    if (c.ok && std::isfinite(c.Delta) && c.R_tilde > kIncoherentThreshold) init = std::make_pair(c.R_tilde, c.Delta);
    SolverOptions opts;
    opts.init = init;
    const auto th = evaluate_theory(cfg.params, K, opts);
    summary["theory"] = json::parse(theory_json(th));
    auto f = open_out(dir / "prediction.csv");
    write_prediction_csv(f, th.profile);
  }
  {
    auto f = open_out(dir / "summary.json");
    f << summary.dump(2) << '\n';
  }
  std::cout << "state=" << c.state << " R_tilde=" << c.R_tilde << " Delta=" << c.Delta
            << " amp_slope=" << c.amp_slope << " locked_fraction=" << c.locked_fraction << '\n';
  std::cout << "wrote " << (dir / "summary.json").string() << '\n';
  if (!c.ok) {
    std::cerr << "error: " << c.error << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_theory(const Settings& s) {
  RunConfig cfg = s.resolve();
  auto K = resolve_couplings(cfg);
  cfg.params.validate();
  write_resolved(cfg);
  const auto th = evaluate_theory(cfg.params, K);
  auto j = json::parse(theory_json(th));
  j["params"] = params_json(cfg.params);
  {
    auto f = open_out(cfg.output_dir / "theory.json");
    f << j.dump(2) << '\n';
  }
  {
    auto f = open_out(cfg.output_dir / "prediction.csv");
    write_prediction_csv(f, th.profile);
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_sweep(const Settings& s) {
  RunConfig cfg = s.resolve();
  const auto source = resolve_source(cfg);
  write_resolved(cfg);
  SweepSpec spec;
  spec.base = cfg.params;
  spec.beta_range = cfg.beta_range;
  spec.d0_range = cfg.d0_range;
  spec.seeds = cfg.seeds();
  spec.mode = cfg.mode;
  spec.plan = cfg.plan;
  spec.measure = cfg.measure();
  spec.measure.keep_trajectory = false;
  spec.workers = cfg.workers;
  const auto grid = run_grid(spec, source);
  for (const auto& p : export_grid(grid, cfg.output_dir)) std::cout << "wrote " << p.string() << '\n';
  const std::size_t total = grid.simulated.size() + grid.theory.size();
  const std::size_t failed = grid.failed_cells();
  std::cout << "cells=" << grid.beta_range.n * grid.d0_range.n << " failed=" << failed
            << " wall_seconds=" << grid.wall_seconds << '\n';
  if (failed == 0) return kExitOk;
  return failed == total ? kExitRuntime : kExitPartial;
}

int cmd_classify(const std::string& summary_path, const std::string& couplings_path) {
  std::ifstream in(summary_path);
  if (!in) throw ConfigError("cannot open " + summary_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("summary is not valid JSON: ") + e.what());
  }
  if (!j.contains("params")) throw ConfigError("summary has no params block");
  const auto params = params_from_json(j.at("params"));
  const double R = j.at("R_tilde").is_null() ? 0.0 : j.at("R_tilde").get<double>();
  const double Delta = j.at("Delta").is_null() ? NAN : j.at("Delta").get<double>();
  StateLabel label;
  if (j.contains("layout")) {
    if (!j.contains("K_min") || !j.contains("K_max")) throw ConfigError("summary lacks K_min / K_max");
    const CouplingSet range({j.at("K_min").get<double>(), j.at("K_max").get<double>()});
    const auto& l = j.at("layout");
    LockLayout layout;
    layout.any_locked = l.at("any_locked").get<bool>();
    layout.lead_drift = l.at("lead_drift").get<bool>();
    layout.trail_drift = l.at("trail_drift").get<bool>();
    layout.fragmented = l.at("fragmented").get<bool>();
    layout.in_phase_tolerance = 1e-3;
    label = label_from_layout(std::isfinite(Delta) ? R : 0.0, Delta, params, range, layout);
    if (j.contains("amp_slopes")) {
      const auto slopes = j.at("amp_slopes").get<std::vector<double>>();
      if (!slopes.empty()) label.amp_slope = classify_slopes(slopes);
    }
  } else {
    if (couplings_path.empty()) throw ConfigError("summary has no measured layout; pass --couplings");
    const auto K = read_couplings_csv(fs::path(couplings_path));
    label = classify_state(std::isfinite(Delta) ? R : 0.0, Delta, params, K);
  }
  json out{{"state_label", label.name()}, {"major", to_string(label.major)},
           {"pattern", to_string(label.pattern)}, {"amp_slope", to_string(label.amp_slope)},
           {"table", label.table}, {"ambiguous", label.ambiguous}, {"note", label.note}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled Stuart-Landau oscillators with inhomogeneous coupling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  Settings gen_s, sim_s, th_s, sw_s;
  bool gen_graph = false;
  std::string gen_from;
  auto* gen = app.add_subcommand("gen", "sample a coupling set and optionally a degree-sequence graph");
  gen_s.add_config(gen);
  gen_s.add(gen, kDistFlags);
  gen_s.add(gen, {{"--n", "N", "number of oscillators"}, {"--out", "output_dir", "output directory"}});
  gen->add_flag("--graph", gen_graph, "also build a random graph with degrees round(K N)");
  gen->add_option("--from-couplings", gen_from, "build the graph from this coupling CSV")->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "integrate one (alpha, beta, d0) point over the seed list");
  sim_s.add_config(sim);
  sim_s.add(sim, kModelFlags);
  sim_s.add(sim, kDistFlags);
  sim_s.add(sim, kRunFlags);
  sim_s.add_flag(sim, "--graph-from-couplings", "graph_from_couplings", "simulate on a degree-sequence graph");
  sim_s.add_flag(sim, "--symmetrize", "symmetrize", "symmetrize the adjacency file");
  sim_s.add_flag(sim, "--theory", "theory", "add the self-consistent solution and predicted profiles");
  sim_s.add_flag(sim, "--trajectory", "save_trajectory", "write the first seed's trajectory");

  auto* th = app.add_subcommand("theory", "solve the self-consistency equations at one point");
  th_s.add_config(th);
  th_s.add(th, kModelFlags);
  th_s.add(th, kDistFlags);
  th_s.add(th, {{"--out", "output_dir", "output directory"}});

  auto* sw = app.add_subcommand("sweep", "run a (beta, d0) phase-diagram grid at fixed alpha");
  sw_s.add_config(sw);
  sw_s.add(sw, kModelFlags);
  sw_s.add(sw, kDistFlags);
  sw_s.add(sw, kRunFlags);
  sw_s.add(sw, kGridFlags);
  sw_s.add(sw, {{"--source", "couplings", "coupling CSV (same as --couplings)"}});
  sw_s.add_flag(sw, "--graph-from-couplings", "graph_from_couplings", "sweep the degree-sequence graph");
  sw_s.add_flag(sw, "--symmetrize", "symmetrize", "symmetrize the adjacency file");

  std::string cls_summary, cls_couplings;
  auto* cls = app.add_subcommand("classify", "state label from a summary JSON");
  cls->add_option("--summary", cls_summary, "summary.json from simulate or theory.json")
      ->required()
      ->check(CLI::ExistingFile);
  cls->add_option("--couplings", cls_couplings, "coupling CSV, needed for theory summaries")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_s, gen_graph, gen_from);
    if (*sim) return cmd_simulate(sim_s);
    if (*th) return cmd_theory(th_s);
    if (*sw) return cmd_sweep(sw_s);
    if (*cls) return cmd_classify(cls_summary, cls_couplings);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
