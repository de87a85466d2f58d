#include "selfnorm/experiments.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "selfnorm/error.hpp"

using namespace selfnorm;
using ::testing::DoubleNear;

namespace {

// E exp(lambda S_n - lambda^2 n / 2) for Rademacher steps, by enumerating
// all 2^n sign patterns.
double enumerate_rademacher(double lambda, int n)
{
  long double total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int s = 2 * std::popcount(mask) - n;
    total += std::exp(static_cast<long double>(lambda) * s - 0.5L * lambda * lambda * n);
  }
  return static_cast<double>(total / (1u << n));
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void expect_identical(const std::vector<BoundReport> &x, const std::vector<BoundReport> &y)
{
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].label, y[i].label);
    EXPECT_TRUE(same_bits(x[i].estimate, y[i].estimate)) << x[i].label;
    EXPECT_TRUE(same_bits(x[i].std_error, y[i].std_error)) << x[i].label;
    EXPECT_EQ(x[i].pass, y[i].pass);
    EXPECT_EQ(x[i].series, y[i].series);
  }
}

ExperimentConfig rademacher_config()
{
  ExperimentConfig cfg;
  cfg.label = "t";
  cfg.seed = 1234;
  cfg.paths = 100000;
  cfg.horizon = 10;
  cfg.checkpoints = {1, 10};
  cfg.lambda_grid = {0, 0.5, 1};
  return cfg;
}

} // namespace

TEST(Enumeration, MatchesProductFormula)
{
  for (double lambda : {0.25, 1.0, 2.0})
    EXPECT_THAT(enumerate_rademacher(lambda, 10),
        DoubleNear(std::pow(std::cosh(lambda) * std::exp(-0.5 * lambda * lambda), 10), 1e-14));
  EXPECT_THAT(enumerate_rademacher(1, 10), DoubleNear(0.51571979436688785358, 1e-14));
}

TEST(SupermartingaleMean, RademacherMatchesEnumeration)
{
  const auto reports = check_supermartingale_mean(rademacher_config());
  int checked = 0;
  for (const auto &r : reports) {
    EXPECT_TRUE(r.pass) << r.label;
    EXPECT_EQ(r.rule, BoundReport::Rule::Upper);
    EXPECT_EQ(r.analytic_bound, 1.0);
    if (r.lambda == 0) {
      EXPECT_EQ(r.estimate, 1.0);
      EXPECT_EQ(r.std_error, 0.0);
      continue;
    }
    const double exact = enumerate_rademacher(r.lambda, static_cast<int>(r.n));
    EXPECT_LT(std::fabs(r.estimate - exact), 3 * r.std_error + 1e-15) << r.lambda << " n=" << r.n;
    ++checked;
  }
  EXPECT_EQ(checked, 4);
}

TEST(SupermartingaleMean, IndependentOfWorkerCount)
{
  ExperimentConfig cfg = rademacher_config();
  cfg.paths = 5000;
  cfg.block_size = 37;
  cfg.trackers = {};
  const auto one = check_supermartingale_mean(cfg);
  cfg.workers = 3;
  expect_identical(one, check_supermartingale_mean(cfg));
  cfg.workers = 8;
  cfg.block_size = 1;
  expect_identical(one, check_supermartingale_mean(cfg));
}

TEST(SupermartingaleMean, UncertifiedLambdaIsAnError)
{
  ExperimentConfig cfg = rademacher_config();
  cfg.spec = spec::Bernstein{1.0, 0.5};
  cfg.lambda_grid = {0.9};
  cfg.paths = 10;
  EXPECT_THROW(check_supermartingale_mean(cfg), CertificationError);
}

TEST(Config, Validation)
{
  ExperimentConfig cfg = rademacher_config();
  cfg.checkpoints = {10, 1};
  EXPECT_THROW(validated(cfg), ConfigError);
  cfg.checkpoints = {1, 11};
  EXPECT_THROW(validated(cfg), ConfigError);
  cfg.checkpoints = {};
  EXPECT_EQ(validated(cfg).checkpoints, std::vector<std::uint64_t>{10});
  cfg.paths = 0;
  EXPECT_THROW(validated(cfg), ConfigError);
}

TEST(TailBound, RequiresAllRealCertificate)
{
  ExperimentConfig cfg = rademacher_config();
  cfg.spec = spec::Bernstein{};
  cfg.x_grid = {2};
  cfg.paths = 10;
  EXPECT_THROW(validate_tail_bound(cfg, 1.0), CertificationError);
}

TEST(TailBound, FrequencyAndBinomialError)
{
  ExperimentConfig cfg = rademacher_config();
  cfg.paths = 20000;
  cfg.horizon = 50;
  cfg.checkpoints = {};
  cfg.x_grid = {1.0, 1.4142135623730951, 3};
  const auto reports = validate_tail_bound(cfg, 10);
  ASSERT_EQ(reports.size(), 3u);
  for (const auto &r : reports) {
    EXPECT_TRUE(r.pass);
    EXPECT_THAT(r.std_error, DoubleNear(std::sqrt(r.estimate * (1 - r.estimate) / 20000), 1e-12));
    EXPECT_EQ(r.n, 50u);
  }
  EXPECT_EQ(reports[0].analytic_bound, 1.0);
  EXPECT_THAT(reports[1].analytic_bound, DoubleNear(std::exp(-1.0), 4e-16));
}

TEST(Rules, Semantics)
{
  BoundReport r;
  r.rule = BoundReport::Rule::Upper;
  r.estimate = 1.05;
  r.std_error = 0.02;
  r.analytic_bound = 1;
  apply_rule(r);
  EXPECT_TRUE(r.pass);
  r.std_error = 0.01;
  apply_rule(r);
  EXPECT_FALSE(r.pass);

  r.rule = BoundReport::Rule::Interval;
  r.interval_lo = 0.45;
  r.interval_hi = 0.52;
  r.estimate = 0.52;
  apply_rule(r);
  EXPECT_TRUE(r.pass);
  r.estimate = 0.5201;
  apply_rule(r);
  EXPECT_FALSE(r.pass);

  r.rule = BoundReport::Rule::Increasing;
  r.series = {1, 2, 3};
  apply_rule(r);
  EXPECT_TRUE(r.pass);
  r.series = {1, 2, 2};
  apply_rule(r);
  EXPECT_FALSE(r.pass);
  r.rule = BoundReport::Rule::NonDecreasing;
  apply_rule(r);
  EXPECT_TRUE(r.pass);
  r.rule = BoundReport::Rule::Decreasing;
  r.series = {3, 2, 1};
  apply_rule(r);
  EXPECT_TRUE(r.pass);
  r.series = {3, 2, std::nan("")};
  apply_rule(r);
  EXPECT_FALSE(r.pass);

  r.rule = BoundReport::Rule::Never;
  r.estimate = 0;
  apply_rule(r);
  EXPECT_TRUE(r.pass);
  r.estimate = 0.01;
  apply_rule(r);
  EXPECT_FALSE(r.pass);
}

TEST(Quantiles, TypeSeven)
{
  const std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(median(v), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0), 1);
  EXPECT_DOUBLE_EQ(quantile(v, 1), 4);
  EXPECT_DOUBLE_EQ(quantile(v, 0.35), 2.05);
  EXPECT_DOUBLE_EQ(median({5, 1, 3}), 3);
}

TEST(Crossing, PointMassBrownianBelowBound)
{
  ExperimentConfig cfg;
  cfg.label = "c";
  cfg.seed = 5;
  cfg.paths = 4000;
  cfg.horizon = 2000;
  cfg.checkpoints = {100, 2000};
  cfg.spec = spec::BrownianGrid{};
  const MixtureCrossing src{MixtureMeasure(PointMasses{{{0.5, 1.0}}}), 5.0};
  const auto reports = crossing_frequency(cfg, src);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports.back().rule, BoundReport::Rule::NonDecreasing);
  for (const auto &r : reports)
    EXPECT_TRUE(r.pass) << r.label;
  EXPECT_DOUBLE_EQ(reports[0].analytic_bound, 0.2);
  EXPECT_LE(reports[0].estimate, reports[1].estimate);
}

TEST(Crossing, GaussianEqualityCaseNearInverseLevel)
{
  ExperimentConfig cfg;
  cfg.label = "g";
  cfg.seed = 6;
  cfg.paths = 2000;
  spec::MvBrownianGrid s;
  s.grid = {TimeGrid::Kind::Geometric, 0, 1e-4, 1.01, {}};
  cfg.spec = s;
  cfg.horizon = s.grid.steps_to(1e4);
  const GaussianCrossing src{GaussianMixture(Eigen::MatrixXd::Identity(2, 2)), 2.0, std::nullopt};
  const auto reports = crossing_frequency(cfg, src);
  // continuous-time probability is exactly 1/2; the grid can only undercount
  EXPECT_LT(reports.front().estimate, 0.5 + 3 * reports.front().std_error);
  EXPECT_GT(reports.front().estimate, 0.35);
}

TEST(Lil, SummaryShape)
{
  ExperimentConfig cfg;
  cfg.label = "l";
  cfg.seed = 9;
  cfg.paths = 50;
  cfg.horizon = 5000;
  cfg.checkpoints = {100, 5000};
  const auto s = lil_track(cfg);
  EXPECT_DOUBLE_EQ(s.limsup, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(s.threshold, std::sqrt(2.0) * 1.15);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.final_maxima.size(), 50u);
  EXPECT_LE(s.rows[0].max_median, s.rows[1].max_median);
  EXPECT_LE(s.rows[0].exceed, s.rows[1].exceed);
  EXPECT_THAT(s.rows[1].max_median, DoubleNear(median(s.final_maxima), 0));
}

TEST(Growth, RequiresThreePointProcess)
{
  ExperimentConfig cfg;
  cfg.paths = 4;
  EXPECT_THROW(growth_rate_diagnostic(cfg), ConfigError);
  cfg.spec = spec::ThreePointTruncated{};
  cfg.horizon = 2000;
  cfg.checkpoints = {1000, 2000};
  const auto rows = growth_rate_diagnostic(cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[1].normalizer_ratio, 1);
}

TEST(SupMoment, StabilityReport)
{
  ExperimentConfig cfg;
  cfg.label = "s";
  cfg.seed = 3;
  cfg.paths = 20000;
  cfg.horizon = 400;
  cfg.checkpoints = {200, 400};
  const auto reports = sup_moment_estimate(cfg, SupFunctional{});
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports.back().rule, BoundReport::Rule::Below);
  EXPECT_GT(reports[0].estimate, 0);
}
