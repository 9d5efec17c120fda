#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "slnet/error.hpp"
#include "slnet/integrator.hpp"
#include "slnet/model.hpp"
#include "slnet/rng.hpp"

using namespace slnet;

namespace {

ModelParams params(std::size_t n) {
  ModelParams p;
  p.N = n;
  p.alpha = 0.3 * std::numbers::pi;
  p.beta = 0.2 * std::numbers::pi;
  p.d0 = 1.3;
  p.S = 1.7;
  return p;
}

CouplingSet random_couplings(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> K(n);
  for (auto& k : K) k = 0.005 + 0.03 * rng.uniform();
  return CouplingSet(K);
}

// Direct double sum over the coupling term.
std::vector<Complex> brute_force(const EnsembleState& s, const ModelParams& p, const CouplingSet& K) {
  const std::size_t n = s.size();
  std::vector<Complex> dz(n);
  const Complex eb = std::polar(1.0, -p.beta);
  const Complex ea = std::polar(p.d0, -p.alpha);
  for (std::size_t j = 0; j < n; ++j) {
    const Complex z = s.z[j];
    Complex c(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) c += s.z[k] * eb - z * ea;
    dz[j] = Complex(p.lambda - std::norm(z), p.omega) * z + p.S * K[j] / static_cast<double>(n) * c;
  }
  return dz;
}

}  // namespace

TEST(Model, ParamsValidation) {
  ModelParams p;
  p.N = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.N = 3;
  p.d0 = -1.0;
  EXPECT_NO_THROW(p.validate());
  p.alpha = std::numbers::pi;
  EXPECT_THROW(p.validate(), ConfigError);
  p.alpha = 0.0;
  p.beta = std::numbers::pi / 2;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Model, CouplingSetRejectsNonPositive) {
  EXPECT_THROW(CouplingSet({0.1, 0.0}), ConfigError);
  EXPECT_THROW(CouplingSet({0.1, std::nan("")}), ConfigError);
  const CouplingSet K({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(K.mean(), 2.0);
  EXPECT_DOUBLE_EQ(K.min(), 1.0);
  EXPECT_DOUBLE_EQ(K.max(), 3.0);
  EXPECT_NEAR(K.sd(), std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Model, MeanFieldMatchesDoubleSum) {
  const auto p = params(40);
  const auto K = random_couplings(40, 1);
  const auto s = init_state(p, 2);
  const auto fast = mean_field_rhs(s, p, K);
  const auto slow = brute_force(s, p, K);
  for (std::size_t j = 0; j < 40; ++j) EXPECT_LT(std::abs(fast[j] - slow[j]), 1e-12);
}

TEST(Model, PolarFormMatchesCartesian) {
  const auto p = params(25);
  const auto K = random_couplings(25, 3);
  const auto s = init_state(p, 4);
  const auto dz = mean_field_rhs(s, p, K);
  const auto pol = polar_rhs(s, p, K);
  for (std::size_t j = 0; j < 25; ++j) {
    const double r = std::abs(s.z[j]);
    const double th = std::arg(s.z[j]);
    // dz = (dr + i r dtheta) e^{i theta}
    const Complex expect = Complex(pol.dr[j], r * pol.dtheta[j]) * std::polar(1.0, th);
    EXPECT_LT(std::abs(expect - dz[j]), 1e-12);
  }
}

TEST(Model, PolarFormRejectsZeroAmplitude) {
  const auto p = params(2);
  const CouplingSet K({0.02, 0.02});
  EnsembleState s{{Complex(0.0, 0.0), Complex(1.0, 0.0)}, 0.0};
  EXPECT_THROW(polar_rhs(s, p, K), SingularityError);
}

TEST(Model, ReducedNetworkIsMeanFieldWithDegreeCouplings) {
  const auto p = params(6);
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {0, 3}};
  const auto g = NetworkGraph::from_undirected(6, edges);
  std::vector<double> K(6);
  for (std::size_t j = 0; j < 6; ++j) K[j] = static_cast<double>(g.degree(j)) / 6.0;
  const auto s = init_state(p, 5);
  const auto a = reduced_network_rhs(s, p, g);
  const auto b = mean_field_rhs(s, p, CouplingSet(K));
  for (std::size_t j = 0; j < 6; ++j) EXPECT_LT(std::abs(a[j] - b[j]), 1e-13);
}

TEST(Model, FullNetworkMatchesEdgeSum) {
  const auto p = params(5);
  const std::vector<std::pair<std::size_t, std::size_t>> ts{{0, 1}, {0, 2}, {1, 0}, {2, 4}, {3, 4}, {4, 3}};
  const auto g = NetworkGraph::from_directed(5, ts);
  const auto s = init_state(p, 6);
  const auto dz = full_network_rhs(s, p, g);
  NetworkField field(p, g);
  std::vector<Complex> dz2(5);
  field(s.z, dz2);
  const Complex eb = std::polar(1.0, -p.beta);
  const Complex ea = std::polar(p.d0, -p.alpha);
  for (std::size_t j = 0; j < 5; ++j) {
    Complex c(0.0, 0.0);
    for (const auto& [t, src] : ts) {
      if (t == j) c += s.z[src] * eb - s.z[j] * ea;
    }
    const Complex expect = Complex(p.lambda - std::norm(s.z[j]), p.omega) * s.z[j] + p.S / 5.0 * c;
    EXPECT_LT(std::abs(dz[j] - expect), 1e-13);
    EXPECT_LT(std::abs(dz2[j] - expect), 1e-13);
  }
}

TEST(Model, GraphConstructionChecks) {
  const std::vector<std::pair<std::size_t, std::size_t>> loop{{1, 1}};
  EXPECT_THROW(NetworkGraph::from_directed(3, loop), Error);
  const std::vector<std::pair<std::size_t, std::size_t>> dup{{0, 1}, {0, 1}};
  EXPECT_THROW(NetworkGraph::from_directed(3, dup), Error);
  const std::vector<std::pair<std::size_t, std::size_t>> out{{0, 3}};
  EXPECT_THROW(NetworkGraph::from_directed(3, out), Error);
  const std::vector<std::pair<std::size_t, std::size_t>> und{{0, 1}, {1, 2}};
  const auto g = NetworkGraph::from_undirected(3, und);
  EXPECT_TRUE(g.is_symmetric());
  EXPECT_EQ(g.degree(1), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_EQ(g.edge_list().size(), 2u);
}

TEST(Model, HomogeneousInPhaseStateIsStationaryInRotatingFrame) {
  // z_j = r e^{i Omega t} with r^2 = lambda + K(cos beta - d0 cos alpha),
  // Omega = omega - K(sin beta - d0 sin alpha).
  auto p = params(10);
  p.S = 1.0;
  const double k = 0.02;
  const CouplingSet K(std::vector<double>(10, k));
  const double r = std::sqrt(p.lambda + k * (std::cos(p.beta) - p.d0 * std::cos(p.alpha)));
  const double Omega = p.omega - k * (std::sin(p.beta) - p.d0 * std::sin(p.alpha));
  EnsembleState s{std::vector<Complex>(10, Complex(r, 0.0)), 0.0};
  const auto dz = mean_field_rhs(s, p, K);
  for (const auto& d : dz) EXPECT_LT(std::abs(d - Complex(0.0, Omega * r)), 1e-14);
}
