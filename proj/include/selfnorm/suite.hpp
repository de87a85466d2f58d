#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selfnorm/io.hpp"

namespace selfnorm {

// One entry of a verification suite: an operation of the experiments module
// with its config and operation-specific parameters.
struct SuiteCheck {
  std::string operation;
  ExperimentConfig cfg;
  io::Json params; // the check object as written, for echo and extra fields
};

struct Suite {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<SuiteCheck> checks;
};

// Parses a suite; the seed comes from `seed` when given, otherwise from the
// file, and is an error when neither is present. Check i runs with
// path_seed(seed, i).
Suite load_suite(const io::Json &j, std::optional<std::uint64_t> seed, unsigned workers);

// Parses a single check object (as found in a suite's "checks" array).
SuiteCheck load_check(const io::Json &j, std::uint64_t seed, unsigned workers);

struct CheckResult {
  std::string label;
  std::string operation;
  std::uint64_t seed = 0;
  io::Json config;
  std::vector<BoundReport> reports;
  io::Json details;

  bool pass() const;
};

struct SuiteResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool pass() const;
};

CheckResult run_check(const SuiteCheck &check);
SuiteResult run_suite(const Suite &suite);

io::Json to_json(const SuiteResult &r);
// One row per report; columns documented in the README.
std::string reports_csv(const SuiteResult &r);

enum class ReportFormat { Csv, Json, Both };

// Writes report.json and/or report.csv into dir (created if missing) and
// returns the written paths.
std::vector<std::string> write_reports(const SuiteResult &r, const std::string &dir, ReportFormat format);

} // namespace selfnorm
