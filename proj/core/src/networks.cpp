#include "slnet/networks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "slnet/error.hpp"
#include "slnet/rng.hpp"

namespace slnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Comma- or semicolon-separated when either appears, whitespace-separated otherwise.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find_first_of(",;") != std::string::npos) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find_first_of(",;", start);
      out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  } else {
    std::istringstream is(line);
    for (std::string f; is >> f;) out.push_back(f);
  }
  return out;
}

bool parse_double(const std::string& s, double& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

bool parse_index(const std::string& s, std::size_t& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::vector<double> draw_with_redraw(std::size_t n, const std::optional<std::pair<double, double>>& bounds,
                                     auto&& draw) {
  std::vector<double> out(n);
  constexpr std::size_t kMaxRedraws = 1000000;
  for (auto& k : out) {
    std::size_t tries = 0;
    do {
      if (++tries > kMaxRedraws) throw ConfigError("distribution puts no mass inside the requested bounds");
      k = draw();
    } while (!(k > 0.0) || (bounds && (k < bounds->first || k > bounds->second)));
  }
  return out;
}

}  // namespace

std::string to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::gaussian: return "gaussian";
    case DistributionKind::powerlaw: return "powerlaw";
    case DistributionKind::weibull: return "weibull";
    case DistributionKind::file: return "file";
  }
  return "unknown";
}

DistributionKind parse_distribution_kind(const std::string& name) {
  if (name == "gaussian") return DistributionKind::gaussian;
  if (name == "powerlaw") return DistributionKind::powerlaw;
  if (name == "weibull") return DistributionKind::weibull;
  if (name == "file") return DistributionKind::file;
  throw ConfigError("unknown distribution kind '" + name + "'");
}

void DistributionSpec::validate() const {
  if (k_bounds) {
    const auto [lo, hi] = *k_bounds;
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw ConfigError("k_bounds must satisfy 0 < k_min < k_max");
  }
  switch (kind) {
    case DistributionKind::gaussian:
      if (!(mean > 0.0) || !(sd > 0.0)) throw ConfigError("gaussian couplings need mean > 0 and sd > 0");
      break;
    case DistributionKind::powerlaw:
      if (!(gamma0 > 1.0) || !std::isfinite(gamma0)) throw ConfigError("power law needs gamma0 > 1");
      if (!k_bounds && !(mean > 0.0)) throw ConfigError("power law needs a positive mean or explicit bounds");
      break;
    case DistributionKind::weibull:
      if (!(mean > 0.0) || !(shape > 0.0)) throw ConfigError("weibull couplings need mean > 0 and shape > 0");
      break;
    case DistributionKind::file:
      if (path.empty()) throw ConfigError("file couplings need a path");
      break;
  }
}

CouplingSet sample_couplings(const DistributionSpec& spec, std::size_t n) {
  switch (spec.kind) {
    case DistributionKind::gaussian: return sample_gaussian_couplings(spec, n);
    case DistributionKind::powerlaw: return sample_powerlaw_couplings(spec, n);
    case DistributionKind::weibull: return sample_weibull_couplings(spec, n);
    case DistributionKind::file: spec.validate(); return read_couplings_csv(spec.path);
  }
  throw ConfigError("unknown distribution kind");
}

CouplingSet sample_gaussian_couplings(const DistributionSpec& spec, std::size_t n) {
  if (spec.kind != DistributionKind::gaussian) throw ConfigError("spec is not gaussian");
  spec.validate();
  if (n == 0) throw ConfigError("n must be positive");
  Rng rng(spec.seed);
  return CouplingSet(draw_with_redraw(n, spec.k_bounds, [&] { return rng.normal(spec.mean, spec.sd); }));
}

double powerlaw_mean(double gamma, double lo, double hi) {
  if (std::abs(gamma - 2.0) < 1e-12) return std::log(hi / lo) / (1.0 / lo - 1.0 / hi);
  const double a = 1.0 - gamma;
  const double b = 2.0 - gamma;
  return (a / b) * (std::pow(hi, b) - std::pow(lo, b)) / (std::pow(hi, a) - std::pow(lo, a));
}

std::pair<double, double> powerlaw_bounds(const DistributionSpec& spec) {
  spec.validate();
  if (spec.k_bounds) {
    const auto [lo, hi] = *spec.k_bounds;
    if (spec.mean > 0.0 && !(spec.mean > lo && spec.mean < hi)) {
      throw ConfigError("power-law mean lies outside the supplied bounds");
    }
    return *spec.k_bounds;
  }
  // The mean scales linearly with K_min at fixed ratio, so bisection on the
  // unit-scale mean is exact up to the bracket tolerance.
  const double unit_mean = powerlaw_mean(spec.gamma0, 1.0, kPowerLawRatio);
  double lo = spec.mean / kPowerLawRatio;
  double hi = spec.mean;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * unit_mean < spec.mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double k_min = 0.5 * (lo + hi);
  return {k_min, k_min * kPowerLawRatio};
}

CouplingSet sample_powerlaw_couplings(const DistributionSpec& spec, std::size_t n) {
  if (spec.kind != DistributionKind::powerlaw) throw ConfigError("spec is not a power law");
  if (n == 0) throw ConfigError("n must be positive");
  const auto [lo, hi] = powerlaw_bounds(spec);
  const double a = 1.0 - spec.gamma0;
  const double lo_a = std::pow(lo, a);
  const double hi_a = std::pow(hi, a);
  Rng rng(spec.seed);
  std::vector<double> K(n);
  for (auto& k : K) {
    const double u = rng.uniform();
    k = std::pow(lo_a + u * (hi_a - lo_a), 1.0 / a);
    k = std::clamp(k, lo, hi);
  }
  return CouplingSet(std::move(K));
}

CouplingSet sample_weibull_couplings(const DistributionSpec& spec, std::size_t n) {
  if (spec.kind != DistributionKind::weibull) throw ConfigError("spec is not weibull");
  spec.validate();
  if (n == 0) throw ConfigError("n must be positive");
  const double scale = spec.mean / std::tgamma(1.0 + 1.0 / spec.shape);
  Rng rng(spec.seed);
  return CouplingSet(draw_with_redraw(n, spec.k_bounds, [&] {
    return scale * std::pow(-std::log1p(-rng.uniform()), 1.0 / spec.shape);
  }));
}

CouplingSet read_couplings_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_couplings_csv(in);
}

CouplingSet read_couplings_csv(std::istream& in) {
  std::vector<double> K;
  std::string line;
  std::size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (is_blank(line)) continue;
    const auto fields = split_fields(line);
    double value = 0.0;
    if (fields.size() != 1 || !parse_double(fields[0], value)) {
      if (first && fields.size() == 1) {
        first = false;
        continue;
      }
      throw ParseError("expected one number per line", row, 1);
    }
    first = false;
    if (!(value > 0.0) || !std::isfinite(value)) throw ParseError("coupling must be positive", row, 1);
    K.push_back(value);
  }
  if (K.empty()) throw ParseError("coupling file contains no values");
  return CouplingSet(std::move(K));
}

void write_couplings_csv(std::ostream& out, const CouplingSet& couplings) {
  out.precision(17);
  for (const double k : couplings.values()) out << k << '\n';
}

std::vector<std::size_t> gaussian_degrees(double mean, double sd, std::size_t n, std::size_t k_min,
                                          std::size_t k_max, std::uint64_t seed) {
  if (!(sd > 0.0) || !(mean > 0.0)) throw ConfigError("degree distribution needs mean > 0 and sd > 0");
  if (k_min > k_max) throw ConfigError("k_min must not exceed k_max");
  Rng rng(seed);
  std::vector<std::size_t> out(n);
  for (auto& k : out) {
    double x = 0.0;
    do {
      x = rng.normal(mean, sd);
    } while (!(x > 0.0));
    const auto r = static_cast<std::size_t>(std::llround(x));
    k = std::clamp(r, k_min, k_max);
  }
  return out;
}

std::vector<std::size_t> degrees_from_couplings(const CouplingSet& couplings) {
  const double n = static_cast<double>(couplings.size());
  const auto to_int = [&](double k) { return static_cast<std::size_t>(std::max(0LL, std::llround(k * n))); };
  const std::size_t lo = std::max<std::size_t>(1, to_int(couplings.min()));
  const std::size_t hi = std::max(lo, to_int(couplings.max()));
  std::vector<std::size_t> out(couplings.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::clamp(to_int(couplings[j]), lo, hi);
  return out;
}

bool is_graphical(std::span<const std::size_t> degrees) {
  std::vector<std::size_t> d(degrees.begin(), degrees.end());
  std::sort(d.begin(), d.end(), std::greater<>());
  const std::size_t n = d.size();
  const std::size_t total = std::accumulate(d.begin(), d.end(), std::size_t{0});
  if (total % 2 != 0) return false;
  if (n > 0 && d.front() >= n) return false;
  std::size_t left = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    left += d[k - 1];
    std::size_t right = k * (k - 1);
    for (std::size_t i = k; i < n; ++i) right += std::min(d[i], k);
    if (left > right) return false;
  }
  return true;
}

namespace {

class EdgeSet {
 public:
  explicit EdgeSet(std::size_t n) : n_(n) {}

  bool contains(std::size_t a, std::size_t b) const { return keys_.count(key(a, b)) != 0; }
  void add(std::size_t a, std::size_t b) {
    keys_.insert(key(a, b));
    edges_.emplace_back(a, b);
  }
  void remove_at(std::size_t index) {
    const auto [a, b] = edges_[index];
    keys_.erase(key(a, b));
    edges_[index] = edges_.back();
    edges_.pop_back();
  }
  void clear() {
    keys_.clear();
    edges_.clear();
  }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

 private:
  std::uint64_t key(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    return static_cast<std::uint64_t>(a) * n_ + b;
  }

  std::size_t n_;
  std::unordered_set<std::uint64_t> keys_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

void remove_stub(std::vector<std::size_t>& stubs, std::size_t i) {
  stubs[i] = stubs.back();
  stubs.pop_back();
}

// Random pairing with per-pair rejection. Returns the unpaired stubs; empty on success.
std::vector<std::size_t> pair_stubs(std::span<const std::size_t> degrees, EdgeSet& edges, Rng& rng) {
  std::vector<std::size_t> stubs;
  for (std::size_t j = 0; j < degrees.size(); ++j) stubs.insert(stubs.end(), degrees[j], j);
  constexpr int kTriesPerPair = 50;
  while (stubs.size() >= 2) {
    bool placed = false;
    for (int t = 0; t < kTriesPerPair && !placed; ++t) {
      const auto i = static_cast<std::size_t>(rng.below(stubs.size()));
      auto j = static_cast<std::size_t>(rng.below(stubs.size() - 1));
      if (j >= i) ++j;
      const std::size_t u = stubs[i];
      const std::size_t v = stubs[j];
      if (u == v || edges.contains(u, v)) continue;
      edges.add(u, v);
      remove_stub(stubs, std::max(i, j));
      remove_stub(stubs, std::min(i, j));
      placed = true;
    }
    if (!placed) return stubs;
  }
  return stubs;
}

// Places the leftover stubs (u, v) by replacing a random edge (x, y) with
// (u, x) and (v, y); the degrees of x and y are unchanged.
void repair(std::vector<std::size_t> stubs, EdgeSet& edges, Rng& rng) {
  constexpr std::size_t kMaxAttempts = 1000000;
  while (stubs.size() >= 2) {
    const std::size_t u = stubs.back();
    stubs.pop_back();
    auto direct = std::find_if(stubs.begin(), stubs.end(),
                               [&](std::size_t v) { return v != u && !edges.contains(u, v); });
    if (direct != stubs.end()) {
      edges.add(u, *direct);
      stubs.erase(direct);
      continue;
    }
    const std::size_t v = stubs.back();
    stubs.pop_back();
    bool done = false;
    for (std::size_t attempt = 0; attempt < kMaxAttempts && !done && !edges.edges().empty(); ++attempt) {
      const auto index = static_cast<std::size_t>(rng.below(edges.edges().size()));
      auto [x, y] = edges.edges()[index];
      if (rng.below(2) == 1) std::swap(x, y);
      if (u == x || v == y || edges.contains(u, x) || edges.contains(v, y)) continue;
      if ((u == y && v == x) || (u == v && x == y)) continue;
      edges.remove_at(index);
      edges.add(u, x);
      edges.add(v, y);
      done = true;
    }
    if (!done) throw GenerationError("edge-swap repair could not place the remaining stubs");
  }
}

std::string describe(std::span<const std::size_t> degrees) {
  std::ostringstream os;
  os << '[';
  const std::size_t shown = std::min<std::size_t>(degrees.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) os << (i ? ", " : "") << degrees[i];
  if (shown < degrees.size()) os << ", ... (" << degrees.size() << " nodes)";
  os << ']';
  return os.str();
}

}  // namespace

NetworkGraph generate_graph_from_degrees(std::vector<std::size_t> degrees, std::uint64_t seed) {
  const std::size_t n = degrees.size();
  if (n == 0) throw GenerationError("degree sequence is empty");
  Rng rng(seed);
  const std::size_t total = std::accumulate(degrees.begin(), degrees.end(), std::size_t{0});
  if (total % 2 != 0) ++degrees[static_cast<std::size_t>(rng.below(n))];
  if (!is_graphical(degrees)) throw GenerationError("degree sequence is not graphical: " + describe(degrees));

  constexpr int kRestarts = 100;
  EdgeSet edges(n);
  std::vector<std::size_t> leftover;
  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    edges.clear();
    leftover = pair_stubs(degrees, edges, rng);
    if (leftover.empty()) break;
  }
  if (!leftover.empty()) repair(std::move(leftover), edges, rng);

  const auto graph = NetworkGraph::from_undirected(n, edges.edges());
  for (std::size_t j = 0; j < n; ++j) {
    if (graph.degree(j) != degrees[j]) {
      throw GenerationError("generated graph does not match degree sequence: " + describe(degrees));
    }
  }
  return graph;
}

LoadedNetwork load_adjacency(const std::filesystem::path& path, const AdjacencyOptions& options) {
  auto in = open_input(path);
  return load_adjacency(in, options);
}

LoadedNetwork load_adjacency(std::istream& in, const AdjacencyOptions& options) {
  struct Row {
    std::size_t line;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line) || line.front() == '#') continue;
    auto fields = split_fields(line);
    if (rows.empty() && !header && !fields.empty()) {
      double tmp = 0.0;
      if (!parse_double(fields[0], tmp)) {
        header = true;
        continue;
      }
    }
    rows.push_back({line_no, std::move(fields)});
  }
  if (rows.empty()) throw ParseError("adjacency input is empty");

  AdjacencyFormat format = options.format;
  if (format == AdjacencyFormat::automatic) {
    const bool square = std::all_of(rows.begin(), rows.end(), [&](const Row& r) { return r.fields.size() == rows.size(); });
    const bool pairs = std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.fields.size() == 2; });
    if (square && !header) {
      format = AdjacencyFormat::dense;
    } else if (pairs) {
      format = AdjacencyFormat::edge_list;
    } else {
      format = AdjacencyFormat::dense;  // reports the first ragged row below
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> directed;  // (target, source)
  std::size_t n = 0;
  std::size_t loops = 0;
  if (format == AdjacencyFormat::dense) {
    n = rows.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = rows[i];
      if (r.fields.size() != n) {
        std::ostringstream os;
        os << "matrix is not square: row has " << r.fields.size() << " entries, expected " << n;
        throw ParseError(os.str(), r.line, std::min(r.fields.size(), n) + 1);
      }
      for (std::size_t k = 0; k < n; ++k) {
        const auto& f = r.fields[k];
        if (f != "0" && f != "1") {
          double v = 0.0;
          if (!parse_double(f, v) || (v != 0.0 && v != 1.0)) {
            throw ParseError("entry '" + f + "' is not 0 or 1", r.line, k + 1);
          }
          if (v == 0.0) continue;
        } else if (f == "0") {
          continue;
        }
        if (i == k) {
          ++loops;
          continue;
        }
        directed.emplace(k, i);  // row is the source, column the target
      }
    }
  } else {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& r : rows) {
      if (r.fields.size() != 2) throw ParseError("edge list rows need two columns", r.line, r.fields.size() + 1);
      std::size_t src = 0;
      std::size_t dst = 0;
      if (!parse_index(r.fields[0], src)) throw ParseError("bad node index '" + r.fields[0] + "'", r.line, 1);
      if (!parse_index(r.fields[1], dst)) throw ParseError("bad node index '" + r.fields[1] + "'", r.line, 2);
      n = std::max({n, src + 1, dst + 1});
      edges.emplace_back(src, dst);
    }
    for (const auto& [src, dst] : edges) {
      if (src == dst) {
        ++loops;
        continue;
      }
      directed.emplace(dst, src);
    }
  }
  if (options.symmetrize) {
    std::vector<std::pair<std::size_t, std::size_t>> mirrored;
    for (const auto& [t, s] : directed) mirrored.emplace_back(s, t);
    directed.insert(mirrored.begin(), mirrored.end());
  }

  // Removing a node can strip the last incoming edge of another, so repeat.
  std::vector<bool> alive(n, true);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> indeg(n, 0);
    for (const auto& [t, s] : directed) {
      if (alive[t] && alive[s]) ++indeg[t];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (alive[j] && indeg[j] == 0) {
        alive[j] = false;
        changed = true;
      }
    }
  }

  LoadedNetwork out;
  out.original_size = n;
  out.self_loops_dropped = loops;
  std::vector<std::size_t> new_index(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (alive[j]) {
      new_index[j] = out.kept.size();
      out.kept.push_back(j);
    } else {
      out.removed.push_back(j);
    }
  }
  if (out.kept.empty()) throw ParseError("no node has a positive in-degree");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [t, s] : directed) {
    if (alive[t] && alive[s]) pairs.emplace_back(new_index[t], new_index[s]);
  }
  out.graph = NetworkGraph::from_directed(out.kept.size(), pairs);
  return out;
}

CouplingSet degrees_to_couplings(const NetworkGraph& network) {
  const std::size_t n = network.size();
  if (n == 0) throw ConfigError("network is empty");
  std::vector<double> K(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (network.degree(j) == 0) {
      std::ostringstream os;
      os << "node " << j << " has degree zero; remove it before the mean-field reduction";
      throw ConfigError(os.str());
    }
    K[j] = static_cast<double>(network.degree(j)) / static_cast<double>(n);
  }
  return CouplingSet(std::move(K));
}

void write_edge_list(std::ostream& out, const NetworkGraph& network) {
  out << "src,dst\n";
  for (const auto& [s, t] : network.edge_list()) out << s << ',' << t << '\n';
}

}  // namespace slnet
