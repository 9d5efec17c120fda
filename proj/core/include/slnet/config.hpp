#pragma once

// Key = value run configuration shared by every CLI command. Lines starting
// with '#' are comments. Angles accept a "pi" suffix ("0.25pi").

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "slnet/integrator.hpp"
#include "slnet/model.hpp"
#include "slnet/networks.hpp"
#include "slnet/sweep.hpp"

namespace slnet {

struct RunConfig {
  ModelParams params;
  IntegrationPlan plan;
  DistributionSpec dist;

  // Network input: an adjacency file, or a degree-sequence graph built from the couplings.
  std::filesystem::path network;
  AdjacencyFormat adjacency_format = AdjacencyFormat::automatic;
  bool symmetrize = false;
  bool graph_from_couplings = false;

  GridAxis beta_range{0.0, 0.49 * 3.14159265358979323846, 41};
  GridAxis d0_range{-2.0, 2.0, 41};
  SweepMode mode = SweepMode::both;

  std::uint64_t master_seed = 1;
  std::size_t n_seeds = 10;
  std::size_t workers = 0;
  double lock_tolerance = kDefaultLockTolerance;
  std::size_t slope_bins = kDefaultSlopeBins;
  bool theory = false;
  bool save_trajectory = false;
  std::filesystem::path output_dir = "out";

  /// Sets one key from its text value. Throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  /// Seed of replicate `rep`: derive_seed(master_seed, {rep}).
  std::vector<std::uint64_t> seeds() const;

  MeasureOptions measure() const;
};

/// Radians from "x" or "xpi".
double parse_angle(const std::string& text);

RunConfig read_config(std::istream& in);
RunConfig read_config(const std::filesystem::path& path);

/// Every key with its resolved value; read_config of the output reproduces `config`.
void write_config(std::ostream& out, const RunConfig& config);

std::string to_string(AdjacencyFormat format);
AdjacencyFormat parse_adjacency_format(const std::string& name);

}  // namespace slnet
