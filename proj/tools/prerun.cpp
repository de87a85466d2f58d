// Pre-run for the oracle intervals committed under data/golden: re-runs the
// checks of a suite with an independent seed and a multiple of their path
// count, and records the quantities the suite's fixed intervals come from.

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfnorm/error.hpp"
#include "selfnorm/experiments.hpp"
#include "selfnorm/io.hpp"
#include "selfnorm/suite.hpp"

using namespace selfnorm;
using io::Json;

namespace {

// Rank band of the sample median of n draws, +-3 binomial SE around 1/2.
std::pair<double, double> median_band(std::uint64_t n)
{
  const double half = 3 * std::sqrt(0.25 / static_cast<double>(n));
  return {0.5 - half, 0.5 + half};
}

Json run_lil(const ExperimentConfig &cfg, std::uint64_t acceptance_paths)
{
  const LilSummary s = lil_track(cfg);
  Json rows = Json::array();
  for (const auto &r : s.rows)
    rows.push_back({{"n", r.n}, {"recorded", r.recorded}, {"max_q10", r.max_q10}, {"max_median", r.max_median},
        {"max_q90", r.max_q90}, {"exceed", r.exceed}, {"value_median", r.value_median}});
  const auto [qlo, qhi] = median_band(acceptance_paths);
  return {{"rows", rows}, {"median_band_levels", {qlo, qhi}},
      {"max_median_interval", {quantile(s.final_maxima, qlo), quantile(s.final_maxima, qhi)}}};
}

Json run_growth(const ExperimentConfig &cfg)
{
  Json rows = Json::array();
  for (const auto &r : growth_rate_diagnostic(cfg))
    rows.push_back({{"n", r.n}, {"square_sum_median", r.square_sum_median}, {"cond_var_median", r.cond_var_median},
        {"normalizer_ratio", r.normalizer_ratio}});
  return {{"rows", rows}};
}

Json run_gaussian(const SuiteCheck &c)
{
  const Json &j = c.params;
  GaussianCrossing src{io::gaussian_from_json(j["mixture"]), io::get_number(j, "c", 0), std::nullopt};
  Json rows = Json::array();
  for (const auto &r : crossing_frequency(c.cfg, src))
    if (r.label.ends_with("/gaussian_crossing"))
      rows.push_back({{"n", r.n}, {"time", r.time}, {"frequency", r.estimate}, {"std_error", r.std_error}});
  return {{"rows", rows}};
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Pre-run oracle generator for bundled suites"};
  std::string suite_path, out;
  std::uint64_t seed = 0;
  std::uint64_t scale = 10;
  unsigned workers = 1;
  std::vector<std::string> only;
  app.add_option("--suite", suite_path, "suite JSON")->required();
  app.add_option("--seed", seed, "pre-run seed (must differ from the suite seed)")->required();
  app.add_option("--scale", scale, "path multiplier")->check(CLI::PositiveNumber);
  app.add_option("--check", only, "restrict to these check labels");
  app.add_option("--workers", workers)->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output JSON")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const Json j = io::read_json_file(suite_path);
    const Suite suite = load_suite(j, seed, workers);
    if (j.contains("seed") && j["seed"].get<std::uint64_t>() == seed)
      throw ConfigError("pre-run seed must differ from the suite seed");
    const std::set<std::string> wanted(only.begin(), only.end());
    Json checks = Json::array();
    for (const auto &c : suite.checks) {
      if (!wanted.empty() && !wanted.count(c.cfg.label))
        continue;
      ExperimentConfig cfg = c.cfg;
      const std::uint64_t acceptance_paths = cfg.paths;
      cfg.paths *= scale;
      Json result;
      if (c.operation == "lil")
        result = run_lil(cfg, acceptance_paths);
      else if (c.operation == "growth_rate")
        result = run_growth(cfg);
      else if (c.operation == "gaussian_crossing") {
        SuiteCheck scaled = c;
        scaled.cfg = cfg;
        result = run_gaussian(scaled);
      } else
        continue;
      result["label"] = cfg.label;
      result["operation"] = c.operation;
      result["seed"] = cfg.seed;
      result["paths"] = cfg.paths;
      result["acceptance_paths"] = acceptance_paths;
      checks.push_back(result);
      std::cerr << "done " << cfg.label << "\n";
    }
    const Json doc = {{"schema", 1}, {"suite", suite.name}, {"suite_file", suite_path}, {"prerun_seed", seed},
        {"scale", scale}, {"checks", checks}};
    std::ofstream os(out);
    if (!os)
      throw ConfigError("cannot write " + out);
    os << doc.dump(2) << "\n";
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
