#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfnorm/mixture.hpp"
#include "selfnorm/processes.hpp"

namespace selfnorm {

// Normalized statistic tracked by lil_track and cluster_set_diagnostic.
enum class LilStatistic {
  Compensator,         // A_n / (B_n loglog(B_n)^((r-1)/r)), B_n = b_pow_r^(1/r)
  SelfNormalized,      // S_n / (V_n loglog(V_n)^(1/2))
  FloorSelfNormalized, // the same with V_n replaced by V_n v e^2, never gated
  Universal,           // (S_n - mu_sum) / (V_n loglog(V_n)^(1/2))
  ConditionalVariance, // S_n / (s_n loglog(s_n v e^2)^(1/2)), s_n^2 = sum E(X_i^2 | F)
};

std::string to_string(LilStatistic s);
LilStatistic lil_statistic_from_string(const std::string &s);

struct ExperimentConfig {
  std::string label;
  ProcessSpec spec = spec::Rademacher{};
  std::uint64_t seed = 0;
  std::uint64_t paths = 1000;
  std::uint64_t horizon = 100;
  std::vector<std::uint64_t> checkpoints; // empty means {horizon}
  std::vector<double> lambda_grid;
  std::vector<double> x_grid;
  std::vector<double> p_list;
  LilStatistic statistic = LilStatistic::SelfNormalized;
  double k = 3;
  unsigned workers = 1;
  std::uint64_t block_size = 1024;
  double lil_margin = 0.15;
  std::vector<TruncatedTracking> trackers;
};

// Checks and normalizes a config (fills the default checkpoint); throws
// ConfigError.
ExperimentConfig validated(ExperimentConfig cfg);

struct BoundReport {
  enum class Rule {
    Upper,      // estimate - k se <= analytic_bound
    Interval,   // interval_lo <= estimate <= interval_hi
    Never,      // estimate == 0
    Below,      // estimate < analytic_bound
    Increasing, // series strictly increasing
    Decreasing, // series strictly decreasing
    NonDecreasing,
    Diagnostic, // always passes
  };

  std::string label;
  Rule rule = Rule::Upper;
  std::string process;
  double analytic_bound = std::numeric_limits<double>::quiet_NaN();
  double interval_lo = std::numeric_limits<double>::quiet_NaN();
  double interval_hi = std::numeric_limits<double>::quiet_NaN();
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double std_error = 0;
  std::uint64_t paths = 0;
  double k = 3;
  bool pass = false;
  // Grid coordinates; NaN or 0 when not applicable.
  std::uint64_t n = 0;
  double time = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double x = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> series;
};

std::string to_string(BoundReport::Rule r);

// Sets report.pass from the rule.
void apply_rule(BoundReport &report);

// E exp(lambda A_n - (lambda B_n)^r / r) per (lambda, checkpoint), followed by
// the registered truncated supermartingales per checkpoint.
std::vector<BoundReport> check_supermartingale_mean(const ExperimentConfig &cfg);

// P(log_corrected_statistic(A_n, B_n; y) >= x) at the horizon for each x in
// x_grid.
std::vector<BoundReport> validate_tail_bound(const ExperimentConfig &cfg, double y);

// For each p: E|A| / sqrt(B^2 + (EB)^2))^p with EB estimated by the sample
// mean of B, then E log_corrected_statistic^p at y.
std::vector<BoundReport> validate_moment_bound(const ExperimentConfig &cfg,
    const std::vector<double> &p_list, double y);

// E mixture_integrand(A_n, B_n; y) <= 1 at the horizon.
BoundReport check_integrand_mean(const ExperimentConfig &cfg, double y);

struct MixtureCrossing {
  MixtureMeasure measure;
  double c;
  double r = 2;
  // Boundary lookup table over this range of B^r; values outside are
  // evaluated exactly.
  double table_lo = 1e-2;
  double table_hi = 1e8;
  int table_per_decade = 200;
};

struct GaussianCrossing {
  GaussianMixture mixture;
  double c;
  std::optional<std::pair<double, double>> interval;
};

// Frequency of {A_n >= boundary(B_n^r) for some n <= checkpoint}, one report
// per checkpoint plus a non-decreasing series report.
std::vector<BoundReport> crossing_frequency(const ExperimentConfig &cfg,
    const MixtureCrossing &source);
std::vector<BoundReport> crossing_frequency(const ExperimentConfig &cfg,
    const GaussianCrossing &source);

struct LilRow {
  std::uint64_t n;
  std::uint64_t recorded; // paths with at least one recorded value
  double max_q10;
  double max_median;
  double max_q90;
  double max_max;
  std::uint64_t exceed; // paths whose running max passed the threshold
  double value_median;  // cross-sectional median of the statistic at n
};

struct LilSummary {
  LilStatistic statistic;
  double limsup;    // NaN when no almost-sure bound applies
  double threshold; // limsup (1 + margin)
  std::vector<LilRow> rows;
  std::vector<double> final_maxima; // per-path running max at the last checkpoint, path order
};

LilSummary lil_track(const ExperimentConfig &cfg);

struct ClusterWindow {
  std::uint64_t from; // exclusive
  std::uint64_t to;   // inclusive
  std::vector<std::uint64_t> counts;
  std::uint64_t below = 0;
  std::uint64_t above = 0;
};

struct ClusterHistogram {
  std::vector<double> edges; // bins + 1 edges over [-2, 2]
  std::vector<ClusterWindow> windows;

  // Fraction of bins contained in [-limit, limit] that were visited at all.
  double interior_coverage(double limit) const;
};

ClusterHistogram cluster_set_diagnostic(const ExperimentConfig &cfg, int bins);

struct SupFunctional {
  enum class Normalizer {
    Compensator,  // Q = b_pow_r
    SquareSum,    // Q = V_n^2
    PowerSum,     // (P v 1) loglog(P v e^2)^(r-1), P = sum |d_i|^r, root 1/r
  };
  enum class Kind { Power, Exponential };
  Normalizer normalizer = Normalizer::Compensator;
  Kind kind = Kind::Power;
  double value = 2; // p, or alpha for the exponential functional
  double r = 2;     // PowerSum only
};

// E(sup_{n <= checkpoint} statistic)^p, or E sup exp(alpha statistic^2), per
// checkpoint, and the relative change between the last two checkpoints
// against 10%.
std::vector<BoundReport> sup_moment_estimate(const ExperimentConfig &cfg,
    const SupFunctional &f);

struct GrowthRow {
  std::uint64_t n;
  double square_sum_median;   // S_n / (V_n loglog(V_n v e^2)^(1/2))
  double cond_var_median;     // S_n / (s_n loglog(s_n v e^2)^(1/2))
  double normalizer_ratio;    // median s_n / V_n
};

std::vector<GrowthRow> growth_rate_diagnostic(const ExperimentConfig &cfg);

// Median with the average of the two middle values for even sizes; sorts a copy.
double median(std::vector<double> v);
// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> v, double q);

} // namespace selfnorm
