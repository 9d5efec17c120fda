#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slnet/integrator.hpp"
#include "slnet/model.hpp"
#include "slnet/observables.hpp"
#include "slnet/theory.hpp"

namespace slnet {

/// Either a mean-field coupling set or an explicit network.
class CouplingSource {
 public:
  CouplingSource() = default;
  explicit CouplingSource(CouplingSet couplings, std::string description = "couplings");
  explicit CouplingSource(NetworkGraph network, std::string description = "network");

  bool is_network() const noexcept { return network_.has_value(); }
  std::size_t size() const noexcept { return couplings_.size(); }
  /// The coupling set itself, or K_j = k_j / N for a network.
  const CouplingSet& couplings() const noexcept { return couplings_; }
  const NetworkGraph& network() const;
  const std::string& description() const noexcept { return description_; }

  /// Right-hand side for parameters whose N matches this source.
  VectorField field(const ModelParams& params) const;

 private:
  CouplingSet couplings_;
  std::optional<NetworkGraph> network_;
  std::string description_;
};

struct MeasureOptions {
  double lock_tolerance = kDefaultLockTolerance;
  std::size_t slope_bins = kDefaultSlopeBins;
  bool keep_trajectory = false;
};

/// Everything measured from one integration.
struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double R_tilde = 0.0;  // time average over the measurement window
  FrequencyEstimate frequency;
  LockPartition partition;
  AmplitudeSlope amp;
  StateLabel label;
  std::optional<Trajectory> trajectory;
};

/// Integrates one seed and measures it. Never throws for integration or
/// measurement failures; they are reported through ok/error.
SeedResult simulate_seed(const ModelParams& params, const CouplingSource& source, std::uint64_t seed,
                         const IntegrationPlan& plan, const MeasureOptions& options = {});

/// Label of a measured state from the K-ordered locked/drifting layout.
StateLabel classify_measured(double R_tilde, double Delta, const ModelParams& params, const CouplingSet& couplings,
                             const LockPartition& partition, const AmplitudeSlope& amp);

/// One row of a phase diagram.
struct CellRecord {
  double beta = 0.0;
  double d0 = 0.0;
  double R_tilde = 0.0;
  double Delta = 0.0;            // NaN when undefined (incoherent)
  double amp_slope = 0.0;        // NaN when no seed had two occupied bins
  double inflection_frac = 0.0;
  std::string state;
  bool fully_drifting = false;
  bool ok = true;
  std::string error;
  double locked_fraction = 0.0;  // not exported; mean over seeds
};

struct PointResult {
  ModelParams params;
  std::vector<SeedResult> seeds;
  CellRecord cell;
  std::vector<std::uint64_t> failed_seeds;
};

/// Simulates every seed and aggregates: means over seeds, modal label, drift
/// mask (mean locked fraction below 1%).
PointResult run_point(const ModelParams& params, const CouplingSource& source, std::span<const std::uint64_t> seeds,
                      const IntegrationPlan& plan, const MeasureOptions& options = {});

/// Theory counterpart of a cell; `init` seeds the self-consistency solve.
struct TheoryCell {
  CellRecord cell;
  TheoryPoint point;
  // Signed quantities whose zero sets are the diagram boundary curves.
  double delta = 0.0;
  double r_minus_d0 = 0.0;
  double margin_kmin = 0.0;
  double margin_kmax = 0.0;
};

TheoryCell run_theory_point(const ModelParams& params, const CouplingSet& couplings,
                            const std::optional<std::pair<double, double>>& init = std::nullopt,
                            std::size_t slope_bins = kDefaultSlopeBins);

enum class SweepMode { simulate, theory, both };

std::string to_string(SweepMode mode);
SweepMode parse_sweep_mode(const std::string& name);

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 2;

  double at(std::size_t i) const;
};

struct SweepSpec {
  ModelParams base;  // lambda, omega, S, alpha; beta and d0 are overwritten per cell
  GridAxis beta_range{0.0, 0.49 * 3.14159265358979323846, 41};
  GridAxis d0_range{-2.0, 2.0, 41};
  std::vector<std::uint64_t> seeds;
  SweepMode mode = SweepMode::both;
  IntegrationPlan plan;
  MeasureOptions measure;
  std::size_t workers = 0;  // 0: hardware concurrency

  void validate() const;
};

struct SweepGrid {
  double alpha = 0.0;
  GridAxis beta_range;
  GridAxis d0_range;
  SweepMode mode = SweepMode::simulate;
  std::vector<CellRecord> simulated;  // index i_beta * n_d0 + i_d0
  std::vector<TheoryCell> theory;
  std::string source;
  std::vector<std::uint64_t> seeds;
  IntegrationPlan plan;
  ModelParams base;
  double wall_seconds = 0.0;
  std::size_t workers = 1;

  std::size_t index(std::size_t i_beta, std::size_t i_d0) const { return i_beta * d0_range.n + i_d0; }
  std::size_t failed_cells() const;
};

/// Seed of replicate `rep` in cell (i_beta, i_d0).
std::uint64_t cell_seed(std::uint64_t master, std::size_t i_beta, std::size_t i_d0, std::size_t rep);

/// Evaluates every cell on a worker pool. Cells write only their own slot,
/// so the result does not depend on the number of workers.
SweepGrid run_grid(const SweepSpec& spec, const CouplingSource& source);

/// CSV `alpha,beta,d0,R_tilde,Delta,amp_slope,inflection_frac,state,fully_drifting,status`.
void write_grid_csv(std::ostream& out, double alpha, std::span<const CellRecord> cells);

struct LoadedGrid {
  std::vector<double> alpha;
  std::vector<CellRecord> cells;
};

LoadedGrid read_grid_csv(std::istream& in);
LoadedGrid read_grid_csv(const std::filesystem::path& path);

/// JSON sidecar: spec echo, code version, RNG, wall time.
std::string grid_metadata_json(const SweepGrid& grid);

struct BoundaryPoint {
  std::string curve_id;
  double beta = 0.0;
  double d0 = 0.0;
};

/// Zero crossings of the theory indicators between adjacent cells, located by
/// linear interpolation. Curves: delta_zero, R_eq_D0, lock_edge_kmin, lock_edge_kmax.
std::vector<BoundaryPoint> boundary_curves(const SweepGrid& grid);
void write_boundary_csv(std::ostream& out, std::span<const BoundaryPoint> points);

/// Writes <stem>_sim.csv / <stem>_theory.csv (per mode), <stem>_meta.json and,
/// with theory, <stem>_boundaries.csv into `dir`. Returns the written paths.
std::vector<std::filesystem::path> export_grid(const SweepGrid& grid, const std::filesystem::path& dir,
                                               const std::string& stem = "grid");

/// Library version string.
const char* version();

}  // namespace slnet
