#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "slnet/error.hpp"
#include "slnet/networks.hpp"

using namespace slnet;

namespace {

template <class Cdf>
double ks_statistic(std::span<const double> values, Cdf cdf) {
  std::vector<double> xs(values.begin(), values.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// 1% critical value of the one-sample KS statistic.
double ks_crit(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

// Composite Simpson rule.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

bool simple_and_symmetric(const NetworkGraph& g) {
  for (std::size_t j = 0; j < g.size(); ++j) {
    std::set<std::size_t> seen;
    for (const auto s : g.sources(j)) {
      if (s == j || !seen.insert(s).second) return false;
    }
  }
  return g.is_symmetric();
}

}  // namespace

TEST(Networks, GaussianCouplingsMatchNormalCdf) {
  DistributionSpec spec;
  spec.seed = 7;
  const auto K = sample_couplings(spec, 5000);
  const auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - spec.mean) / (spec.sd * std::sqrt(2.0))); };
  EXPECT_LT(ks_statistic(K.values(), cdf), ks_crit(5000));
  EXPECT_GT(K.min(), 0.0);
}

TEST(Networks, GaussianBoundsRespected) {
  DistributionSpec spec;
  spec.k_bounds = std::make_pair(0.015, 0.025);
  const auto K = sample_couplings(spec, 2000);
  EXPECT_GE(K.min(), 0.015);
  EXPECT_LE(K.max(), 0.025);
}

TEST(Networks, PowerLawMeanMatchesQuadrature) {
  for (const double gamma : {1.5, 2.0, 2.5, 3.0}) {
    const double lo = 0.003, hi = 0.06;
    const double z = simpson([&](double x) { return std::pow(x, -gamma); }, lo, hi);
    const double m = simpson([&](double x) { return std::pow(x, 1.0 - gamma); }, lo, hi) / z;
    EXPECT_NEAR(powerlaw_mean(gamma, lo, hi), m, 1e-9 * m) << "gamma " << gamma;
  }
}

TEST(Networks, PowerLawDefaultBoundsHitMean) {
  DistributionSpec spec;
  spec.kind = DistributionKind::powerlaw;
  const auto [lo, hi] = powerlaw_bounds(spec);
  EXPECT_NEAR(hi / lo, kPowerLawRatio, 1e-9);
  EXPECT_NEAR(powerlaw_mean(spec.gamma0, lo, hi), spec.mean, 1e-12);
}

TEST(Networks, PowerLawSamplesMatchTruncatedCdf) {
  DistributionSpec spec;
  spec.kind = DistributionKind::powerlaw;
  spec.seed = 11;
  const auto [lo, hi] = powerlaw_bounds(spec);
  const auto K = sample_couplings(spec, 5000);
  const double g1 = 1.0 - spec.gamma0;
  const auto cdf = [&](double x) { return (std::pow(x, g1) - std::pow(lo, g1)) / (std::pow(hi, g1) - std::pow(lo, g1)); };
  EXPECT_LT(ks_statistic(K.values(), cdf), ks_crit(5000));
  EXPECT_GE(K.min(), lo);
  EXPECT_LE(K.max(), hi);
}

TEST(Networks, PowerLawInfeasibleBounds) {
  DistributionSpec spec;
  spec.kind = DistributionKind::powerlaw;
  spec.k_bounds = std::make_pair(0.03, 0.05);
  EXPECT_THROW(sample_couplings(spec, 10), ConfigError);
}

TEST(Networks, WeibullMatchesCdf) {
  DistributionSpec spec;
  spec.kind = DistributionKind::weibull;
  spec.seed = 13;
  const auto K = sample_couplings(spec, 5000);
  const double scale = spec.mean / std::tgamma(1.0 + 1.0 / spec.shape);
  const auto cdf = [&](double x) { return 1.0 - std::exp(-std::pow(x / scale, spec.shape)); };
  EXPECT_LT(ks_statistic(K.values(), cdf), ks_crit(5000));
  EXPECT_NEAR(K.mean(), spec.mean, 4.0 * K.sd() / std::sqrt(5000.0));
}

TEST(Networks, SamplingIsSeeded) {
  DistributionSpec spec;
  spec.seed = 5;
  const auto a = sample_couplings(spec, 100);
  const auto b = sample_couplings(spec, 100);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  spec.seed = 6;
  const auto c = sample_couplings(spec, 100);
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(Networks, CouplingCsvRoundTrip) {
  DistributionSpec spec;
  const auto K = sample_couplings(spec, 50);
  std::stringstream ss;
  write_couplings_csv(ss, K);
  const auto back = read_couplings_csv(ss);
  ASSERT_EQ(back.size(), 50u);
  for (std::size_t j = 0; j < 50; ++j) EXPECT_EQ(back[j], K[j]);
  std::istringstream with_header("K\n0.1\n\n0.2\n");
  EXPECT_EQ(read_couplings_csv(with_header).size(), 2u);
  std::istringstream bad("0.1\nabc\n");
  try {
    read_couplings_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(Networks, ErdosGallai) {
  EXPECT_TRUE(is_graphical(std::vector<std::size_t>{3, 3, 3, 3}));
  EXPECT_TRUE(is_graphical(std::vector<std::size_t>{3, 1, 1, 1}));
  EXPECT_FALSE(is_graphical(std::vector<std::size_t>{3, 3, 1, 1}));
  EXPECT_FALSE(is_graphical(std::vector<std::size_t>{2, 1, 1, 1}));
  EXPECT_FALSE(is_graphical(std::vector<std::size_t>{4, 1, 1, 1}));
}

TEST(Networks, GraphRealizesDegrees) {
  const auto deg = gaussian_degrees(20.0, 4.5, 500, 8, 34, 3);
  auto even = deg;
  const bool odd = std::accumulate(deg.begin(), deg.end(), std::size_t{0}) % 2 == 1;
  const auto g = generate_graph_from_degrees(deg, 17);
  ASSERT_TRUE(simple_and_symmetric(g));
  std::size_t diffs = 0;
  for (std::size_t j = 0; j < deg.size(); ++j) {
    EXPECT_GE(g.degree(j), deg[j]);
    diffs += g.degree(j) - deg[j];
  }
  EXPECT_EQ(diffs, odd ? 1u : 0u);
  EXPECT_TRUE(std::all_of(deg.begin(), deg.end(), [](std::size_t k) { return k >= 8 && k <= 34; }));
}

TEST(Networks, HeavyTailGraph) {
  DistributionSpec spec;
  spec.kind = DistributionKind::weibull;
  spec.seed = 21;
  const auto K = sample_couplings(spec, 989);
  const auto deg = degrees_from_couplings(K);
  const auto g = generate_graph_from_degrees(deg, 4);
  EXPECT_TRUE(simple_and_symmetric(g));
  EXPECT_EQ(g.size(), 989u);
}

TEST(Networks, NonGraphicalThrows) {
  EXPECT_THROW(generate_graph_from_degrees({5, 1, 1, 1}, 1), GenerationError);
}

TEST(Networks, DenseAdjacencyIsSourceByTarget) {
  std::istringstream in("0 1 1\n1 0 0\n0 1 0\n");
  const auto net = load_adjacency(in);
  const auto& g = net.graph;
  ASSERT_EQ(g.size(), 3u);
  // M[0][1] = 1: node 0 drives node 1.
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_EQ(g.degree(1), 2u);
}

TEST(Networks, EdgeListWithSelfLoopsAndRemoval) {
  std::istringstream in("src,dst\n0,1\n1,0\n1,1\n0,2\n2,0\n3,0\n");
  const auto net = load_adjacency(in);
  EXPECT_EQ(net.self_loops_dropped, 1u);
  EXPECT_EQ(net.original_size, 4u);
  EXPECT_EQ(net.removed, (std::vector<std::size_t>{3}));
  EXPECT_EQ(net.graph.size(), 3u);
  EXPECT_EQ(net.graph.degree(0), 2u);
}

TEST(Networks, SymmetrizeOption) {
  std::istringstream in("src,dst\n0,1\n1,2\n2,0\n");
  AdjacencyOptions opts;
  opts.symmetrize = true;
  const auto net = load_adjacency(in, opts);
  EXPECT_TRUE(net.graph.is_symmetric());
  EXPECT_EQ(net.graph.degree(0), 2u);
}

TEST(Networks, ParseErrorsCarryPosition) {
  std::istringstream bad("0,1,0\n1,0,x\n0,1,0\n");
  try {
    load_adjacency(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  std::istringstream ragged("0,1,0\n1,0\n0,1,0\n");
  EXPECT_THROW(load_adjacency(ragged), ParseError);
}

TEST(Networks, EdgeListRoundTrip) {
  const auto g = generate_graph_from_degrees({2, 2, 2, 3, 1}, 9);
  std::stringstream ss;
  write_edge_list(ss, g);
  AdjacencyOptions opts;
  opts.symmetrize = true;
  const auto back = load_adjacency(ss, opts).graph;
  ASSERT_EQ(back.size(), g.size());
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(back.degree(j), g.degree(j));
}

TEST(Networks, DegreesToCouplings) {
  const std::vector<std::pair<std::size_t, std::size_t>> e{{0, 1}, {1, 2}, {0, 2}, {2, 3}};
  const auto g = NetworkGraph::from_undirected(4, e);
  const auto K = degrees_to_couplings(g);
  EXPECT_DOUBLE_EQ(K[2], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(K[3], 1.0 / 4.0);
}
