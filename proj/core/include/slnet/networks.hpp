#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slnet/model.hpp"

namespace slnet {

enum class DistributionKind { gaussian, powerlaw, weibull, file };

std::string to_string(DistributionKind kind);
DistributionKind parse_distribution_kind(const std::string& name);

struct DistributionSpec {
  DistributionKind kind = DistributionKind::gaussian;
  double mean = 20e-3;
  double sd = 4.5e-3;        // gaussian
  double gamma0 = 2.0;       // powerlaw exponent
  double shape = 2.4;        // weibull shape
  std::optional<std::pair<double, double>> k_bounds;
  std::filesystem::path path;  // file
  std::uint64_t seed = 1;

  void validate() const;
};

/// Ratio K_max / K_min used when a power law is requested without bounds.
inline constexpr double kPowerLawRatio = 20.0;

/// Dispatches on spec.kind. `n` is ignored for the file kind.
CouplingSet sample_couplings(const DistributionSpec& spec, std::size_t n);

/// Draws from Normal(mean, sd); non-positive draws (and draws outside
/// k_bounds when given) are redrawn.
CouplingSet sample_gaussian_couplings(const DistributionSpec& spec, std::size_t n);

/// Truncation interval of the power law: k_bounds if supplied, otherwise the
/// interval with K_max / K_min = kPowerLawRatio whose mean equals spec.mean.
std::pair<double, double> powerlaw_bounds(const DistributionSpec& spec);

/// Mean of the density proportional to x^-gamma on [lo, hi].
double powerlaw_mean(double gamma, double lo, double hi);

/// Inverse-CDF draws from the truncated power law.
CouplingSet sample_powerlaw_couplings(const DistributionSpec& spec, std::size_t n);

/// Weibull with the given shape and the scale that makes its mean spec.mean.
/// Draws outside k_bounds are redrawn.
CouplingSet sample_weibull_couplings(const DistributionSpec& spec, std::size_t n);

/// One K per line; blank lines ignored, a non-numeric first line is taken as a header.
CouplingSet read_couplings_csv(const std::filesystem::path& path);
CouplingSet read_couplings_csv(std::istream& in);
void write_couplings_csv(std::ostream& out, const CouplingSet& couplings);

/// Integer degrees: positive Normal(mean, sd) draws rounded to the nearest
/// integer and clamped to [k_min, k_max].
std::vector<std::size_t> gaussian_degrees(double mean, double sd, std::size_t n, std::size_t k_min,
                                          std::size_t k_max, std::uint64_t seed);

/// k_j = round(K_j N) clamped to [round(K_min N), round(K_max N)] and at least 1.
std::vector<std::size_t> degrees_from_couplings(const CouplingSet& couplings);

/// Erdos-Gallai test for a simple undirected graph.
bool is_graphical(std::span<const std::size_t> degrees);

/// Random simple undirected graph with exactly the given degrees. An odd
/// degree sum is fixed by incrementing one random node. Random stub pairing
/// with rejection and up to 100 restarts, then an edge-swap repair pass.
/// Throws GenerationError for non-graphical sequences.
NetworkGraph generate_graph_from_degrees(std::vector<std::size_t> degrees, std::uint64_t seed);

enum class AdjacencyFormat { automatic, dense, edge_list };

struct AdjacencyOptions {
  AdjacencyFormat format = AdjacencyFormat::automatic;
  bool symmetrize = false;
};

struct LoadedNetwork {
  NetworkGraph graph;
  std::size_t original_size = 0;
  std::vector<std::size_t> kept;     // original index of each retained node
  std::vector<std::size_t> removed;  // original indices dropped for zero in-degree
  std::size_t self_loops_dropped = 0;
};

/// Reads a dense 0/1 matrix (M[src][dst], comma or whitespace separated) or a
/// `src,dst` edge list. Nodes with zero in-degree are removed repeatedly until
/// none remain. Throws ParseError with the 1-based row and column of bad input.
LoadedNetwork load_adjacency(const std::filesystem::path& path, const AdjacencyOptions& options = {});
LoadedNetwork load_adjacency(std::istream& in, const AdjacencyOptions& options = {});

/// K_j = k_j / N. Throws ConfigError if any node has degree zero.
CouplingSet degrees_to_couplings(const NetworkGraph& network);

/// `src,dst` lines; one line per unordered pair for symmetric graphs.
void write_edge_list(std::ostream& out, const NetworkGraph& network);

}  // namespace slnet
