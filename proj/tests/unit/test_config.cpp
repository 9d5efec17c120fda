#include <gtest/gtest.h>

#include <numbers>
#include <set>
#include <sstream>

#include "slnet/config.hpp"
#include "slnet/error.hpp"

using namespace slnet;

TEST(Config, AngleParsing) {
  EXPECT_DOUBLE_EQ(parse_angle("0.25pi"), 0.25 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(parse_angle("pi"), std::numbers::pi);
  EXPECT_DOUBLE_EQ(parse_angle("0.3"), 0.3);
  EXPECT_DOUBLE_EQ(parse_angle(" 1e-1 "), 0.1);
  EXPECT_THROW(parse_angle("abc"), ConfigError);
  EXPECT_THROW(parse_angle("0.2deg"), ConfigError);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.set("alpha", "0.25pi");
  c.set("beta", "0.22pi");
  c.set("d0", "1.35");
  c.set("dist", "weibull");
  c.set("k_min", "0.001");
  c.set("k_max", "0.1");
  c.set("mode", "theory");
  c.set("n_seeds", "3");
  c.set("theory", "true");
  c.set("output_dir", "results/x");
  std::stringstream ss;
  write_config(ss, c);
  const auto back = read_config(ss);
  EXPECT_EQ(back.params.alpha, c.params.alpha);
  EXPECT_EQ(back.params.beta, c.params.beta);
  EXPECT_EQ(back.params.d0, 1.35);
  EXPECT_EQ(back.dist.kind, DistributionKind::weibull);
  ASSERT_TRUE(back.dist.k_bounds.has_value());
  EXPECT_EQ(back.dist.k_bounds->first, 0.001);
  EXPECT_EQ(back.mode, SweepMode::theory);
  EXPECT_EQ(back.seeds(), c.seeds());
  EXPECT_TRUE(back.theory);
  EXPECT_EQ(back.output_dir, "results/x");
  std::stringstream again;
  write_config(again, back);
  EXPECT_EQ(again.str(), ss.str());
}

TEST(Config, DefaultsRoundTrip) {
  std::stringstream ss;
  write_config(ss, RunConfig{});
  const auto back = read_config(ss);
  EXPECT_FALSE(back.dist.k_bounds.has_value());
  EXPECT_EQ(back.beta_range.n, 41u);
  EXPECT_EQ(back.plan.t_transient, 500.0);
}

TEST(Config, Errors) {
  RunConfig c;
  EXPECT_THROW(c.set("bogus", "1"), ConfigError);
  EXPECT_THROW(c.set("N", "-3"), ConfigError);
  EXPECT_THROW(c.set("theory", "maybe"), ConfigError);
  std::istringstream bad("lambda = 1\nnot a pair\n");
  try {
    read_config(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(Config, SeedsAreDistinct) {
  RunConfig c;
  c.n_seeds = 10;
  const auto s = c.seeds();
  std::set<std::uint64_t> u(s.begin(), s.end());
  EXPECT_EQ(u.size(), 10u);
}
