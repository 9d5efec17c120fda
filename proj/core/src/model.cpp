#include "slnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "slnet/error.hpp"

namespace slnet {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": expected " << want << " oscillators, got " << got;
    throw DimensionError(os.str());
  }
}

}  // namespace

void ModelParams::validate() const {
  constexpr double pi = std::numbers::pi;
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
  if (!(S > 0.0) || !std::isfinite(S)) throw ConfigError("S must be positive and finite");
  if (!(alpha >= 0.0 && alpha < pi)) throw ConfigError("alpha must lie in [0, pi)");
  if (!(beta >= 0.0 && beta < pi / 2)) throw ConfigError("beta must lie in [0, pi/2)");
  if (!std::isfinite(d0)) throw ConfigError("d0 must be finite");
  if (!std::isfinite(omega)) throw ConfigError("omega must be finite");
  if (N < 1) throw ConfigError("N must be at least 1");
}

CouplingSet::CouplingSet(std::vector<double> K) : K_(std::move(K)) {
  if (K_.empty()) throw ConfigError("coupling set is empty");
  double sum = 0.0;
  min_ = K_.front();
  max_ = K_.front();
  for (std::size_t j = 0; j < K_.size(); ++j) {
    const double k = K_[j];
    if (!(k > 0.0) || !std::isfinite(k)) {
      std::ostringstream os;
      os << "coupling K_" << j << " = " << k << " is not strictly positive";
      throw ConfigError(os.str());
    }
    sum += k;
    min_ = std::min(min_, k);
    max_ = std::max(max_, k);
  }
  mean_ = sum / static_cast<double>(K_.size());
  double ss = 0.0;
  for (const double k : K_) ss += (k - mean_) * (k - mean_);
  sd_ = std::sqrt(ss / static_cast<double>(K_.size()));
}

bool EnsembleState::finite() const noexcept {
  return std::all_of(z.begin(), z.end(),
                     [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

// --- NetworkGraph -----------------------------------------------------------

NetworkGraph NetworkGraph::from_directed(std::size_t n,
                                         std::span<const std::pair<std::size_t, std::size_t>> target_source) {
  std::vector<std::vector<std::size_t>> rows(n);
  for (const auto& [target, source] : target_source) {
    if (target >= n || source >= n) {
      std::ostringstream os;
      os << "edge (" << target << ", " << source << ") out of range for " << n << " nodes";
      throw ConfigError(os.str());
    }
    if (target == source) {
      std::ostringstream os;
      os << "self-loop on node " << target;
      throw ConfigError(os.str());
    }
    rows[target].push_back(source);
  }
  NetworkGraph g;
  g.degrees_.resize(n);
  g.offsets_.assign(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) {
    auto& row = rows[j];
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end()) {
      std::ostringstream os;
      os << "duplicate edge into node " << j;
      throw ConfigError(os.str());
    }
    g.degrees_[j] = row.size();
    g.offsets_[j + 1] = g.offsets_[j] + row.size();
    g.sources_.insert(g.sources_.end(), row.begin(), row.end());
  }
  return g;
}

NetworkGraph NetworkGraph::from_undirected(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::pair<std::size_t, std::size_t>> directed;
  directed.reserve(2 * edges.size());
  for (const auto& [a, b] : edges) {
    directed.emplace_back(a, b);
    directed.emplace_back(b, a);
  }
  return from_directed(n, directed);
}

std::span<const std::size_t> NetworkGraph::sources(std::size_t j) const {
  return std::span<const std::size_t>(sources_).subspan(offsets_[j], offsets_[j + 1] - offsets_[j]);
}

bool NetworkGraph::has_edge(std::size_t target, std::size_t source) const {
  const auto row = sources(target);
  return std::binary_search(row.begin(), row.end(), source);
}

bool NetworkGraph::is_symmetric() const {
  for (std::size_t j = 0; j < size(); ++j) {
    for (const auto k : sources(j)) {
      if (!has_edge(k, j)) return false;
    }
  }
  return true;
}

std::vector<std::pair<std::size_t, std::size_t>> NetworkGraph::edge_list() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const bool sym = is_symmetric();
  for (std::size_t j = 0; j < size(); ++j) {
    for (const auto k : sources(j)) {
      if (sym) {
        if (k < j) out.emplace_back(k, j);
      } else {
        out.emplace_back(k, j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- vector fields ----------------------------------------------------------

MeanFieldField::MeanFieldField(const ModelParams& params, const CouplingSet& couplings) {
  params.validate();
  require_size(couplings.size(), params.N, "couplings vs params.N");
  const std::size_t n = couplings.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  linear_re_.resize(n);
  linear_im_.resize(n);
  gain_.resize(n);
  const double ca = std::cos(params.alpha);
  const double sa = std::sin(params.alpha);
  for (std::size_t j = 0; j < n; ++j) {
    const double sk = params.S * couplings[j];
    gain_[j] = sk * inv_n;
    // -S K_j d0 e^{-i alpha} folded into the linear coefficient.
    linear_re_[j] = params.lambda - sk * params.d0 * ca;
    linear_im_[j] = params.omega + sk * params.d0 * sa;
  }
  rot_re_ = std::cos(params.beta);
  rot_im_ = -std::sin(params.beta);
}

void MeanFieldField::operator()(std::span<const Complex> z, std::span<Complex> dz) const {
  const std::size_t n = gain_.size();
  require_size(z.size(), n, "mean-field state");
  require_size(dz.size(), n, "mean-field derivative");
  // Four partial sums break the dependency chain of the reduction.
  const double* zr = reinterpret_cast<const double*>(z.data());
  double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    for (std::size_t q = 0; q < 8; ++q) acc[q] += zr[2 * k + q];
  }
  for (; k < n; ++k) {
    acc[0] += zr[2 * k];
    acc[1] += zr[2 * k + 1];
  }
  const double sum_re = (acc[0] + acc[2]) + (acc[4] + acc[6]);
  const double sum_im = (acc[1] + acc[3]) + (acc[5] + acc[7]);
  const double f_re = rot_re_ * sum_re - rot_im_ * sum_im;
  const double f_im = rot_re_ * sum_im + rot_im_ * sum_re;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = z[j].real();
    const double y = z[j].imag();
    const double a = linear_re_[j] - (x * x + y * y);
    const double b = linear_im_[j];
    dz[j] = Complex(a * x - b * y + gain_[j] * f_re, a * y + b * x + gain_[j] * f_im);
  }
}

NetworkField::NetworkField(const ModelParams& params, const NetworkGraph& network) : network_(network) {
  params.validate();
  require_size(network.size(), params.N, "network vs params.N");
  const std::size_t n = network.size();
  gain_ = params.S / static_cast<double>(n);
  linear_re_.resize(n);
  linear_im_.resize(n);
  const double ca = std::cos(params.alpha);
  const double sa = std::sin(params.alpha);
  for (std::size_t j = 0; j < n; ++j) {
    const double sk = gain_ * static_cast<double>(network.degree(j));
    linear_re_[j] = params.lambda - sk * params.d0 * ca;
    linear_im_[j] = params.omega + sk * params.d0 * sa;
  }
  rot_re_ = std::cos(params.beta);
  rot_im_ = -std::sin(params.beta);
}

void NetworkField::operator()(std::span<const Complex> z, std::span<Complex> dz) const {
  const std::size_t n = linear_re_.size();
  require_size(z.size(), n, "network state");
  require_size(dz.size(), n, "network derivative");
  for (std::size_t j = 0; j < n; ++j) {
    double s_re = 0.0;
    double s_im = 0.0;
    for (const auto k : network_.sources(j)) {
      s_re += z[k].real();
      s_im += z[k].imag();
    }
    const double f_re = gain_ * (rot_re_ * s_re - rot_im_ * s_im);
    const double f_im = gain_ * (rot_re_ * s_im + rot_im_ * s_re);
    const double x = z[j].real();
    const double y = z[j].imag();
    const double a = linear_re_[j] - (x * x + y * y);
    const double b = linear_im_[j];
    dz[j] = Complex(a * x - b * y + f_re, a * y + b * x + f_im);
  }
}

std::vector<Complex> mean_field_rhs(const EnsembleState& state, const ModelParams& params,
                                    const CouplingSet& couplings) {
  require_size(state.size(), couplings.size(), "mean_field_rhs");
  MeanFieldField field(params, couplings);
  std::vector<Complex> dz(state.size());
  field(state.z, dz);
  return dz;
}

PolarDerivative polar_rhs(const EnsembleState& state, const ModelParams& params, const CouplingSet& couplings) {
  params.validate();
  const std::size_t n = state.size();
  require_size(couplings.size(), n, "polar_rhs");
  std::vector<double> r(n);
  std::vector<double> theta(n);
  for (std::size_t j = 0; j < n; ++j) {
    r[j] = std::abs(state.z[j]);
    if (!(r[j] > kPolarFloor)) {
      std::ostringstream os;
      os << "polar form singular: r_" << j << " = " << r[j];
      throw SingularityError(os.str());
    }
    theta[j] = std::arg(state.z[j]);
  }
  PolarDerivative out{std::vector<double>(n), std::vector<double>(n)};
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    double phase_sum = 0.0;
    double amp_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double diff = theta[k] - theta[j] - params.beta;
      phase_sum += r[k] / r[j] * std::sin(diff) + params.d0 * std::sin(params.alpha);
      amp_sum += r[k] * std::cos(diff) - r[j] * params.d0 * std::cos(params.alpha);
    }
    const double g = params.S * couplings[j] / nn;
    out.dtheta[j] = params.omega + g * phase_sum;
    out.dr[j] = (params.lambda - r[j] * r[j]) * r[j] + g * amp_sum;
  }
  return out;
}

std::vector<Complex> full_network_rhs(const EnsembleState& state, const ModelParams& params,
                                      const NetworkGraph& network) {
  require_size(state.size(), network.size(), "full_network_rhs");
  NetworkField field(params, network);
  std::vector<Complex> dz(state.size());
  field(state.z, dz);
  return dz;
}

std::vector<Complex> reduced_network_rhs(const EnsembleState& state, const ModelParams& params,
                                         const NetworkGraph& network) {
  require_size(state.size(), network.size(), "reduced_network_rhs");
  const double n = static_cast<double>(network.size());
  std::vector<double> K(network.size());
  for (std::size_t j = 0; j < network.size(); ++j) {
    K[j] = static_cast<double>(network.degree(j)) / n;
  }
  return mean_field_rhs(state, params, CouplingSet(std::move(K)));
}

}  // namespace slnet
