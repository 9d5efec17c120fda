#pragma once

// Mean-field and full-adjacency Stuart-Landau ensembles.
//
//   dz_j/dt = (lambda - |z_j|^2 + i omega) z_j
//           + (S K_j / N) sum_k (z_k e^{-i beta} - z_j d0 e^{-i alpha})        (mean field)
//           + (S / N) sum_k A_jk (z_k e^{-i beta} - z_j d0 e^{-i alpha})       (network)
//
// Production integration always uses the Cartesian form. The polar form is
// kept only as a test oracle and for observables.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace slnet {

using Complex = std::complex<double>;

/// Signature of a right-hand side: writes dz/dt for state z into dz.
using VectorField = std::function<void(std::span<const Complex> z, std::span<Complex> dz)>;

/// Below this amplitude the polar equations are declared singular.
inline constexpr double kPolarFloor = 1e-9;

struct ModelParams {
  double lambda = 1.0;
  double omega = std::numbers::pi;
  double S = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double d0 = 1.0;
  std::size_t N = 1;

  /// Throws ConfigError if any field is outside its domain.
  void validate() const;
};

// Per-oscillator coupling strengths with cached summary statistics.
class CouplingSet {
 public:
  CouplingSet() = default;
  /// Throws ConfigError unless every entry is finite and strictly positive.
  explicit CouplingSet(std::vector<double> K);

  std::span<const double> values() const noexcept { return K_; }
  double operator[](std::size_t j) const { return K_[j]; }
  std::size_t size() const noexcept { return K_.size(); }
  bool empty() const noexcept { return K_.empty(); }

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  double mean() const noexcept { return mean_; }
  /// Population standard deviation.
  double sd() const noexcept { return sd_; }

 private:
  std::vector<double> K_;
  double min_ = 0.0;
  double max_ = 0.0;
  double mean_ = 0.0;
  double sd_ = 0.0;
};

struct EnsembleState {
  std::vector<Complex> z;
  double t = 0.0;

  std::size_t size() const noexcept { return z.size(); }
  bool finite() const noexcept;
};

// Binary adjacency in compressed-row form. Row j lists the sources k with
// A_jk = 1 (k influences j), so degree(j) is the row sum.
class NetworkGraph {
 public:
  NetworkGraph() = default;

  /// Builds from directed pairs (target, source). Rejects self-loops,
  /// duplicates and out-of-range indices.
  static NetworkGraph from_directed(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> target_source);
  /// Builds a bidirectional graph from unordered pairs.
  static NetworkGraph from_undirected(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t size() const noexcept { return degrees_.size(); }
  std::size_t degree(std::size_t j) const { return degrees_[j]; }
  std::span<const std::size_t> degrees() const noexcept { return degrees_; }
  std::span<const std::size_t> sources(std::size_t j) const;
  std::size_t edge_count() const noexcept { return sources_.size(); }

  bool has_edge(std::size_t target, std::size_t source) const;
  bool is_symmetric() const;
  /// Unordered pairs (i < j) for a symmetric graph, directed (source, target) otherwise.
  std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> sources_;
  std::vector<std::size_t> degrees_;
};

// Mean-field vector field with per-oscillator coefficients precomputed; the
// population sum is formed once per evaluation.
class MeanFieldField {
 public:
  MeanFieldField(const ModelParams& params, const CouplingSet& couplings);
  void operator()(std::span<const Complex> z, std::span<Complex> dz) const;
  std::size_t size() const noexcept { return gain_.size(); }

 private:
  std::vector<double> linear_re_;
  std::vector<double> linear_im_;
  std::vector<double> gain_;  // S K_j / N
  double rot_re_;             // e^{-i beta}
  double rot_im_;
};

// Vector field on an explicit adjacency; cost O(edges) per evaluation.
class NetworkField {
 public:
  NetworkField(const ModelParams& params, const NetworkGraph& network);
  void operator()(std::span<const Complex> z, std::span<Complex> dz) const;
  std::size_t size() const noexcept { return linear_re_.size(); }

 private:
  NetworkGraph network_;
  std::vector<double> linear_re_;
  std::vector<double> linear_im_;
  double gain_;  // S / N
  double rot_re_;
  double rot_im_;
};

std::vector<Complex> mean_field_rhs(const EnsembleState& state, const ModelParams& params,
                                    const CouplingSet& couplings);

struct PolarDerivative {
  std::vector<double> dtheta;
  std::vector<double> dr;
};

/// Direct evaluation of the polar equations. Throws SingularityError if any
/// r_j <= kPolarFloor.
PolarDerivative polar_rhs(const EnsembleState& state, const ModelParams& params, const CouplingSet& couplings);

std::vector<Complex> full_network_rhs(const EnsembleState& state, const ModelParams& params,
                                      const NetworkGraph& network);

/// Mean-field reduction of a network: every sum_k A_jk H is replaced by
/// (k_j / N) sum_k H, i.e. the mean-field model with K_j = k_j / N.
std::vector<Complex> reduced_network_rhs(const EnsembleState& state, const ModelParams& params,
                                         const NetworkGraph& network);

}  // namespace slnet
