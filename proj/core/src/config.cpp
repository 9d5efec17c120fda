#include "slnet/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "slnet/error.hpp"
#include "slnet/rng.hpp"

namespace slnet {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double parse_angle(const std::string& text) {
  const std::string t = trim(text);
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    const std::string head = t.substr(0, t.size() - 2);
    if (head.empty()) return std::numbers::pi;
    if (head == "-") return -std::numbers::pi;
    return to_double("angle", head) * std::numbers::pi;
  }
  return to_double("angle", t);
}

std::string to_string(AdjacencyFormat format) {
  switch (format) {
    case AdjacencyFormat::automatic: return "auto";
    case AdjacencyFormat::dense: return "dense";
    case AdjacencyFormat::edge_list: return "edges";
  }
  return "auto";
}

AdjacencyFormat parse_adjacency_format(const std::string& name) {
  if (name == "auto") return AdjacencyFormat::automatic;
  if (name == "dense") return AdjacencyFormat::dense;
  if (name == "edges") return AdjacencyFormat::edge_list;
  throw ConfigError("unknown adjacency format '" + name + "' (auto, dense, edges)");
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  const auto opt_bound = [&](bool upper) {
    auto b = dist.k_bounds.value_or(std::make_pair(0.0, 0.0));
    if (v.empty()) {
      dist.k_bounds.reset();
      return;
    }
    (upper ? b.second : b.first) = to_double(key, v);
    dist.k_bounds = b;
  };
  if (key == "lambda") params.lambda = to_double(key, v);
  else if (key == "omega") params.omega = parse_angle(v);
  else if (key == "S") params.S = to_double(key, v);
  else if (key == "alpha") params.alpha = parse_angle(v);
  else if (key == "beta") params.beta = parse_angle(v);
  else if (key == "d0") params.d0 = to_double(key, v);
  else if (key == "N") params.N = to_u64(key, v);
  else if (key == "dt") plan.dt = to_double(key, v);
  else if (key == "t_transient") plan.t_transient = to_double(key, v);
  else if (key == "t_measure") plan.t_measure = to_double(key, v);
  else if (key == "record_stride") plan.record_stride = to_u64(key, v);
  else if (key == "dist") dist.kind = parse_distribution_kind(v);
  else if (key == "mean") dist.mean = to_double(key, v);
  else if (key == "sd") dist.sd = to_double(key, v);
  else if (key == "gamma") dist.gamma0 = to_double(key, v);
  else if (key == "shape") dist.shape = to_double(key, v);
  else if (key == "k_min") opt_bound(false);
  else if (key == "k_max") opt_bound(true);
  else if (key == "couplings") dist.path = v;
  else if (key == "dist_seed") dist.seed = to_u64(key, v);
  else if (key == "network") network = v;
  else if (key == "adjacency_format") adjacency_format = parse_adjacency_format(v);
  else if (key == "symmetrize") symmetrize = to_bool(key, v);
  else if (key == "graph_from_couplings") graph_from_couplings = to_bool(key, v);
  else if (key == "beta_lo") beta_range.lo = parse_angle(v);
  else if (key == "beta_hi") beta_range.hi = parse_angle(v);
  else if (key == "beta_n") beta_range.n = to_u64(key, v);
  else if (key == "d0_lo") d0_range.lo = to_double(key, v);
  else if (key == "d0_hi") d0_range.hi = to_double(key, v);
  else if (key == "d0_n") d0_range.n = to_u64(key, v);
  else if (key == "mode") mode = parse_sweep_mode(v);
  else if (key == "master_seed") master_seed = to_u64(key, v);
  else if (key == "n_seeds") n_seeds = to_u64(key, v);
  else if (key == "workers") workers = to_u64(key, v);
  else if (key == "lock_tolerance") lock_tolerance = to_double(key, v);
  else if (key == "slope_bins") slope_bins = to_u64(key, v);
  else if (key == "theory") theory = to_bool(key, v);
  else if (key == "save_trajectory") save_trajectory = to_bool(key, v);
  else if (key == "output_dir") output_dir = v;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out(n_seeds);
  for (std::size_t r = 0; r < n_seeds; ++r) out[r] = derive_seed(master_seed, {r});
  return out;
}

MeasureOptions RunConfig::measure() const {
  MeasureOptions m;
  m.lock_tolerance = lock_tolerance;
  m.slope_bins = slope_bins;
  m.keep_trajectory = save_trajectory;
  return m;
}

RunConfig read_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", row, 1);
    try {
      cfg.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), row, eq + 2);
    }
  }
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return read_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
  out << "# model\n"
      << "lambda = " << num(c.params.lambda) << '\n'
      << "omega = " << num(c.params.omega) << '\n'
      << "S = " << num(c.params.S) << '\n'
      << "alpha = " << num(c.params.alpha) << '\n'
      << "beta = " << num(c.params.beta) << '\n'
      << "d0 = " << num(c.params.d0) << '\n'
      << "N = " << c.params.N << '\n'
      << "# integration\n"
      << "dt = " << num(c.plan.dt) << '\n'
      << "t_transient = " << num(c.plan.t_transient) << '\n'
      << "t_measure = " << num(c.plan.t_measure) << '\n'
      << "record_stride = " << c.plan.record_stride << '\n'
      << "# couplings\n"
      << "dist = " << to_string(c.dist.kind) << '\n'
      << "mean = " << num(c.dist.mean) << '\n'
      << "sd = " << num(c.dist.sd) << '\n'
      << "gamma = " << num(c.dist.gamma0) << '\n'
      << "shape = " << num(c.dist.shape) << '\n'
      << "k_min = " << (c.dist.k_bounds ? num(c.dist.k_bounds->first) : "") << '\n'
      << "k_max = " << (c.dist.k_bounds ? num(c.dist.k_bounds->second) : "") << '\n'
      << "couplings = " << c.dist.path.string() << '\n'
      << "dist_seed = " << c.dist.seed << '\n'
      << "# network\n"
      << "network = " << c.network.string() << '\n'
      << "adjacency_format = " << to_string(c.adjacency_format) << '\n'
      << "symmetrize = " << (c.symmetrize ? "true" : "false") << '\n'
      << "graph_from_couplings = " << (c.graph_from_couplings ? "true" : "false") << '\n'
      << "# sweep\n"
      << "beta_lo = " << num(c.beta_range.lo) << '\n'
      << "beta_hi = " << num(c.beta_range.hi) << '\n'
      << "beta_n = " << c.beta_range.n << '\n'
      << "d0_lo = " << num(c.d0_range.lo) << '\n'
      << "d0_hi = " << num(c.d0_range.hi) << '\n'
      << "d0_n = " << c.d0_range.n << '\n'
      << "mode = " << to_string(c.mode) << '\n'
      << "# run\n"
      << "master_seed = " << c.master_seed << '\n'
      << "n_seeds = " << c.n_seeds << '\n'
      << "workers = " << c.workers << '\n'
      << "lock_tolerance = " << num(c.lock_tolerance) << '\n'
      << "slope_bins = " << c.slope_bins << '\n'
      << "theory = " << (c.theory ? "true" : "false") << '\n'
      << "save_trajectory = " << (c.save_trajectory ? "true" : "false") << '\n'
      << "output_dir = " << c.output_dir.string() << '\n';
}

}  // namespace slnet
