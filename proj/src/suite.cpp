#include "selfnorm/suite.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "selfnorm/error.hpp"

namespace selfnorm {

using io::Json;

namespace {

const std::vector<std::string> kOperations = {"supermartingale_mean", "tail_bound", "moment_bound",
    "integrand_mean", "mixture_crossing", "gaussian_crossing", "lil", "cluster_set", "sup_moment", "growth_rate"};

const ProcessSpec *grid_process(const ProcessSpec &s, const TimeGrid **grid)
{
  if (const auto *b = std::get_if<spec::BrownianGrid>(&s)) {
    *grid = &b->grid;
    return &s;
  }
  if (const auto *m = std::get_if<spec::MvBrownianGrid>(&s)) {
    *grid = &m->grid;
    return &s;
  }
  return nullptr;
}

double require_y(const Json &j)
{
  if (!j.contains("y"))
    throw ConfigError("this operation needs \"y\"");
  return io::get_number(j, "y", 0);
}

BoundReport::Rule trend_rule(const Json &expect, const char *key)
{
  if (!expect.contains(key))
    return BoundReport::Rule::Diagnostic;
  const std::string v = expect[key];
  if (v == "increasing")
    return BoundReport::Rule::Increasing;
  if (v == "decreasing")
    return BoundReport::Rule::Decreasing;
  if (v == "diagnostic")
    return BoundReport::Rule::Diagnostic;
  throw ConfigError(std::string("\"") + key + "\" must be increasing, decreasing or diagnostic");
}

std::pair<double, double> interval_from(const Json &j, const std::string &what)
{
  const auto v = io::number_list(j, what);
  if (v.size() != 2 || !(v[0] <= v[1]))
    throw ConfigError(what + " must be [lo, hi] with lo <= hi");
  return {v[0], v[1]};
}

MixtureCrossing mixture_source(const Json &j)
{
  if (!j.contains("mixture"))
    throw ConfigError("mixture_crossing needs \"mixture\"");
  MixtureMeasure f = io::mixture_from_json(j["mixture"]);
  double c;
  if (j.contains("c") == j.contains("c_over_mass"))
    throw ConfigError("mixture_crossing needs exactly one of \"c\" and \"c_over_mass\"");
  if (j.contains("c"))
    c = io::get_number(j, "c", 0);
  else
    c = io::get_number(j, "c_over_mass", 0) * f.total_mass();
  if (!(c > 0))
    throw ConfigError("crossing level c must be positive");
  MixtureCrossing src{std::move(f), c};
  src.r = io::get_number(j, "r", 2.0);
  if (j.contains("table")) {
    const Json &t = j["table"];
    io::allow_keys(t, {"lo", "hi", "per_decade"}, "boundary table");
    src.table_lo = io::get_number(t, "lo", src.table_lo);
    src.table_hi = io::get_number(t, "hi", src.table_hi);
    src.table_per_decade = static_cast<int>(io::get_number(t, "per_decade", src.table_per_decade));
  }
  return src;
}

GaussianCrossing gaussian_source(const Json &j)
{
  if (!j.contains("mixture"))
    throw ConfigError("gaussian_crossing needs \"mixture\"");
  GaussianCrossing src{io::gaussian_from_json(j["mixture"]), io::get_number(j, "c", 0), std::nullopt};
  if (!(src.c > 1))
    throw ConfigError("gaussian crossing level c must exceed 1");
  if (j.contains("interval"))
    src.interval = interval_from(j["interval"], "interval");
  return src;
}

SupFunctional functional_from(const Json &j)
{
  if (!j.contains("functional"))
    throw ConfigError("sup_moment needs \"functional\"");
  const Json &f = j["functional"];
  io::allow_keys(f, {"normalizer", "kind", "value", "r"}, "functional");
  SupFunctional out;
  const std::string norm = f.value("normalizer", std::string("compensator"));
  if (norm == "compensator")
    out.normalizer = SupFunctional::Normalizer::Compensator;
  else if (norm == "square_sum")
    out.normalizer = SupFunctional::Normalizer::SquareSum;
  else if (norm == "power_sum")
    out.normalizer = SupFunctional::Normalizer::PowerSum;
  else
    throw ConfigError("unknown normalizer \"" + norm + "\"");
  const std::string kind = f.value("kind", std::string("power"));
  if (kind == "power")
    out.kind = SupFunctional::Kind::Power;
  else if (kind == "exponential")
    out.kind = SupFunctional::Kind::Exponential;
  else
    throw ConfigError("unknown functional kind \"" + kind + "\"");
  out.value = io::get_number(f, "value", out.value);
  out.r = io::get_number(f, "r", out.r);
  return out;
}

// Parse-time validation of the operation-specific fields.
void check_params(const SuiteCheck &c)
{
  const Json &j = c.params;
  const std::string &op = c.operation;
  if (op == "tail_bound" || op == "moment_bound" || op == "integrand_mean") {
    if (!(require_y(j) > 0))
      throw ConfigError("\"y\" must be positive");
  }
  if (op == "tail_bound" && c.cfg.x_grid.empty())
    throw ConfigError("tail_bound needs a nonempty \"x_grid\"");
  if (op == "moment_bound" && c.cfg.p_list.empty())
    throw ConfigError("moment_bound needs a nonempty \"p_list\"");
  if (op == "supermartingale_mean" && c.cfg.lambda_grid.empty() && c.cfg.trackers.empty())
    throw ConfigError("supermartingale_mean needs \"lambda_grid\" or \"trackers\"");
  if (op == "mixture_crossing")
    mixture_source(j);
  if (op == "gaussian_crossing")
    gaussian_source(j);
  if (op == "sup_moment")
    functional_from(j);
  if (op == "lil" || op == "growth_rate") {
    const Json expect = j.value("expect", Json::object());
    if (op == "lil") {
      io::allow_keys(expect, {"exceed", "max_median_interval", "value_trend"}, "lil expect");
      if (expect.contains("exceed") && expect["exceed"] != "never" && expect["exceed"] != "diagnostic")
        throw ConfigError("\"exceed\" must be never or diagnostic");
      if (expect.contains("max_median_interval"))
        interval_from(expect["max_median_interval"], "max_median_interval");
      trend_rule(expect, "value_trend");
    } else {
      io::allow_keys(expect, {"square_sum_trend", "cond_var_trend"}, "growth_rate expect");
      trend_rule(expect, "square_sum_trend");
      trend_rule(expect, "cond_var_trend");
    }
  }
  if (op == "cluster_set" && j.contains("bins") && io::to_count(j["bins"], "bins") == 0)
    throw ConfigError("\"bins\" must be positive");
}

BoundReport report_for(const ExperimentConfig &cfg, const std::string &name, BoundReport::Rule rule)
{
  BoundReport r;
  r.label = cfg.label + "/" + name;
  r.rule = rule;
  r.process = process_name(cfg.spec);
  r.paths = cfg.paths;
  r.k = cfg.k;
  return r;
}

void run_lil(const SuiteCheck &c, CheckResult &out)
{
  const ExperimentConfig &cfg = c.cfg;
  const LilSummary s = lil_track(cfg);
  const Json expect = c.params.value("expect", Json::object());
  Json rows = Json::array();
  std::vector<double> values;
  for (const auto &row : s.rows) {
    rows.push_back({{"n", row.n}, {"recorded", row.recorded}, {"max_q10", row.max_q10},
        {"max_median", row.max_median}, {"max_q90", row.max_q90}, {"max_max", row.max_max},
        {"exceed", row.exceed}, {"value_median", row.value_median}});
    values.push_back(row.value_median);
    if (!std::isnan(s.threshold)) {
      const bool never = expect.value("exceed", std::string("diagnostic")) == "never";
      BoundReport r = report_for(cfg, "lil_exceed_fraction", never ? BoundReport::Rule::Never : BoundReport::Rule::Diagnostic);
      r.n = row.n;
      r.analytic_bound = s.threshold;
      r.estimate = static_cast<double>(row.exceed) / static_cast<double>(cfg.paths);
      r.std_error = 0;
      apply_rule(r);
      out.reports.push_back(r);
    }
    BoundReport m = report_for(cfg, "lil_running_max_median", BoundReport::Rule::Diagnostic);
    m.n = row.n;
    m.estimate = row.max_median;
    m.analytic_bound = s.limsup;
    apply_rule(m);
    out.reports.push_back(m);
  }
  if (expect.contains("max_median_interval")) {
    const auto iv = interval_from(expect["max_median_interval"], "max_median_interval");
    BoundReport r = report_for(cfg, "lil_running_max_median_oracle", BoundReport::Rule::Interval);
    r.n = s.rows.back().n;
    r.estimate = s.rows.back().max_median;
    r.interval_lo = iv.first;
    r.interval_hi = iv.second;
    apply_rule(r);
    out.reports.push_back(r);
  }
  BoundReport t = report_for(cfg, "lil_value_median_trend", trend_rule(expect, "value_trend"));
  t.n = s.rows.back().n;
  t.series = values;
  t.estimate = values.back();
  apply_rule(t);
  out.reports.push_back(t);
  out.details = {{"statistic", to_string(s.statistic)}, {"limsup", s.limsup}, {"threshold", s.threshold},
      {"rows", rows}};
}

void run_cluster(const SuiteCheck &c, CheckResult &out)
{
  const ExperimentConfig &cfg = c.cfg;
  const int bins = static_cast<int>(c.params.contains("bins") ? io::to_count(c.params["bins"], "bins") : 40);
  const ClusterHistogram h = cluster_set_diagnostic(cfg, bins);
  Json windows = Json::array();
  for (const auto &w : h.windows)
    windows.push_back({{"from", w.from}, {"to", w.to}, {"counts", w.counts}, {"below", w.below}, {"above", w.above}});
  out.details = {{"edges", h.edges}, {"windows", windows}};

  for (double limit : {1.0, std::sqrt(2.0)}) {
    BoundReport r = report_for(cfg, limit == 1.0 ? "cluster_unit_coverage" : "cluster_limit_coverage",
        BoundReport::Rule::Diagnostic);
    r.n = cfg.checkpoints.back();
    r.x = limit;
    r.estimate = h.interior_coverage(limit);
    apply_rule(r);
    out.reports.push_back(r);
  }
  // Share of the last window beyond 1.2 sqrt(2) in absolute value.
  const double outer = 1.2 * std::sqrt(2.0);
  const auto &last = h.windows.back();
  std::uint64_t total = last.below + last.above, beyond = last.below + last.above;
  for (std::size_t b = 0; b < last.counts.size(); ++b) {
    total += last.counts[b];
    if (h.edges[b] >= outer || h.edges[b + 1] <= -outer)
      beyond += last.counts[b];
  }
  BoundReport r = report_for(cfg, "cluster_outer_fraction", BoundReport::Rule::Diagnostic);
  r.n = cfg.checkpoints.back();
  r.x = outer;
  r.estimate = total ? static_cast<double>(beyond) / static_cast<double>(total) : 0.0;
  apply_rule(r);
  out.reports.push_back(r);
}

void run_growth(const SuiteCheck &c, CheckResult &out)
{
  const ExperimentConfig &cfg = c.cfg;
  const auto rows = growth_rate_diagnostic(cfg);
  const Json expect = c.params.value("expect", Json::object());
  Json table = Json::array();
  std::vector<double> sq, cv, ratio;
  for (const auto &r : rows) {
    table.push_back({{"n", r.n}, {"square_sum_median", r.square_sum_median},
        {"cond_var_median", r.cond_var_median}, {"normalizer_ratio", r.normalizer_ratio}});
    sq.push_back(r.square_sum_median);
    cv.push_back(r.cond_var_median);
    ratio.push_back(r.normalizer_ratio);
  }
  const auto add = [&](const char *name, BoundReport::Rule rule, const std::vector<double> &series) {
    BoundReport r = report_for(cfg, name, rule);
    r.n = rows.back().n;
    r.series = series;
    r.estimate = series.back();
    apply_rule(r);
    out.reports.push_back(r);
  };
  add("growth_square_sum_trend", trend_rule(expect, "square_sum_trend"), sq);
  add("growth_cond_var_trend", trend_rule(expect, "cond_var_trend"), cv);
  add("growth_normalizer_ratio", BoundReport::Rule::Diagnostic, ratio);
  out.details = {{"rows", table}};
}

} // namespace

SuiteCheck load_check(const Json &j, std::uint64_t seed, unsigned workers)
{
  io::allow_keys(j,
      {"label", "description", "operation", "process", "paths", "horizon", "horizon_time", "checkpoints",
          "checkpoint_times", "lambda_grid", "x_grid", "p_list", "y", "statistic", "k", "lil_margin", "block_size",
          "trackers", "mixture", "c", "c_over_mass", "r", "table", "interval", "expect", "bins", "functional"},
      "check");
  SuiteCheck c;
  if (!j.contains("operation") || !j["operation"].is_string())
    throw ConfigError("check needs a string \"operation\"");
  c.operation = j["operation"];
  if (std::find(kOperations.begin(), kOperations.end(), c.operation) == kOperations.end())
    throw ConfigError("unknown operation \"" + c.operation + "\"");
  c.params = j;
  ExperimentConfig &cfg = c.cfg;
  cfg.label = j.value("label", c.operation);
  if (cfg.label.find_first_of(",\"\n") != std::string::npos)
    throw ConfigError("labels may not contain commas, quotes or newlines");
  if (!j.contains("process"))
    throw ConfigError("check \"" + cfg.label + "\" needs a \"process\"");
  cfg.spec = io::process_from_json(j["process"]);
  cfg.seed = seed;
  cfg.workers = workers;
  if (!j.contains("paths"))
    throw ConfigError("check \"" + cfg.label + "\" needs \"paths\"");
  cfg.paths = io::to_count(j["paths"], "paths");

  const TimeGrid *grid = nullptr;
  const bool gridded = grid_process(cfg.spec, &grid) != nullptr;
  if (j.contains("horizon_time") || j.contains("checkpoint_times")) {
    if (!gridded)
      throw ConfigError("horizon_time and checkpoint_times need a time-grid process");
    if (j.contains("horizon") || j.contains("checkpoints"))
      throw ConfigError("give either step counts or times, not both");
    if (!j.contains("horizon_time"))
      throw ConfigError("checkpoint_times needs horizon_time");
    cfg.horizon = grid->steps_to(io::get_number(j, "horizon_time", 0));
    if (j.contains("checkpoint_times"))
      for (double t : io::number_list(j["checkpoint_times"], "checkpoint_times"))
        cfg.checkpoints.push_back(grid->steps_to(t));
  } else {
    if (!j.contains("horizon"))
      throw ConfigError("check \"" + cfg.label + "\" needs \"horizon\"");
    cfg.horizon = io::to_count(j["horizon"], "horizon");
    if (j.contains("checkpoints")) {
      if (!j["checkpoints"].is_array())
        throw ConfigError("checkpoints must be an array");
      for (const auto &v : j["checkpoints"])
        cfg.checkpoints.push_back(io::to_count(v, "checkpoint"));
    }
  }
  if (j.contains("lambda_grid"))
    cfg.lambda_grid = io::number_list(j["lambda_grid"], "lambda_grid");
  if (j.contains("x_grid"))
    cfg.x_grid = io::number_list(j["x_grid"], "x_grid");
  if (j.contains("p_list"))
    cfg.p_list = io::number_list(j["p_list"], "p_list");
  if (j.contains("statistic"))
    cfg.statistic = lil_statistic_from_string(j.value("statistic", std::string()));
  cfg.k = io::get_number(j, "k", cfg.k);
  cfg.lil_margin = io::get_number(j, "lil_margin", cfg.lil_margin);
  if (j.contains("block_size"))
    cfg.block_size = io::to_count(j["block_size"], "block_size");
  if (j.contains("trackers")) {
    if (!j["trackers"].is_array())
      throw ConfigError("trackers must be an array");
    for (const auto &t : j["trackers"])
      cfg.trackers.push_back(io::tracker_from_json(t));
  }
  cfg = validated(std::move(cfg));
  check_params(c);
  return c;
}

Suite load_suite(const Json &j, std::optional<std::uint64_t> seed, unsigned workers)
{
  io::allow_keys(j, {"schema", "name", "description", "seed", "checks"}, "suite");
  if (!j.contains("schema") || j["schema"] != io::kSchema)
    throw ConfigError("suite must declare \"schema\": 1");
  Suite s;
  s.name = j.value("name", std::string("suite"));
  if (seed)
    s.seed = *seed;
  else if (j.contains("seed"))
    s.seed = io::to_count(j["seed"], "seed");
  else
    throw ConfigError("no seed: pass --seed or set \"seed\" in the suite");
  if (!j.contains("checks") || !j["checks"].is_array() || j["checks"].empty())
    throw ConfigError("suite needs a nonempty \"checks\" array");
  std::uint64_t i = 0;
  for (const auto &c : j["checks"]) {
    try {
      s.checks.push_back(load_check(c, path_seed(s.seed, i), workers));
    } catch (const ConfigError &e) {
      throw ConfigError("check " + std::to_string(i) + ": " + e.what());
    }
    ++i;
  }
  return s;
}

bool CheckResult::pass() const
{
  return std::all_of(reports.begin(), reports.end(), [](const BoundReport &r) { return r.pass; });
}

bool SuiteResult::pass() const
{
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult &c) { return c.pass(); });
}

CheckResult run_check(const SuiteCheck &c)
{
  const ExperimentConfig &cfg = c.cfg;
  CheckResult out;
  out.label = cfg.label;
  out.operation = c.operation;
  out.seed = cfg.seed;
  out.config = {{"check", c.params}, {"seed", cfg.seed}, {"horizon", cfg.horizon},
      {"checkpoints", cfg.checkpoints}, {"block_size", cfg.block_size}};
  out.details = Json::object();
  const Json &j = c.params;
  const std::string &op = c.operation;
  if (op == "supermartingale_mean") {
    out.reports = check_supermartingale_mean(cfg);
  } else if (op == "tail_bound") {
    out.reports = validate_tail_bound(cfg, require_y(j));
  } else if (op == "moment_bound") {
    out.reports = validate_moment_bound(cfg, cfg.p_list, require_y(j));
  } else if (op == "integrand_mean") {
    out.reports = {check_integrand_mean(cfg, require_y(j))};
  } else if (op == "mixture_crossing") {
    const MixtureCrossing src = mixture_source(j);
    out.details = {{"c", src.c}, {"total_mass", src.measure.total_mass()}};
    out.reports = crossing_frequency(cfg, src);
  } else if (op == "gaussian_crossing") {
    out.reports = crossing_frequency(cfg, gaussian_source(j));
  } else if (op == "lil") {
    run_lil(c, out);
  } else if (op == "cluster_set") {
    run_cluster(c, out);
  } else if (op == "sup_moment") {
    out.reports = sup_moment_estimate(cfg, functional_from(j));
  } else if (op == "growth_rate") {
    run_growth(c, out);
  }
  return out;
}

SuiteResult run_suite(const Suite &suite)
{
  SuiteResult r;
  r.name = suite.name;
  r.seed = suite.seed;
  for (const auto &c : suite.checks)
    r.checks.push_back(run_check(c));
  return r;
}

Json to_json(const SuiteResult &r)
{
  Json checks = Json::array();
  for (const auto &c : r.checks) {
    Json reports = Json::array();
    for (const auto &b : c.reports)
      reports.push_back(io::to_json(b));
    checks.push_back({{"label", c.label}, {"operation", c.operation}, {"seed", c.seed}, {"config", c.config},
        {"reports", reports}, {"details", c.details}, {"pass", c.pass()}});
  }
  return {{"schema", io::kSchema}, {"suite", r.name}, {"seed", r.seed}, {"pass", r.pass()}, {"checks", checks}};
}

std::string reports_csv(const SuiteResult &r)
{
  std::ostringstream os;
  os << "label,rule,process,n,time,lambda,x,p,estimate,std_error,analytic_bound,interval_lo,interval_hi,k,paths,pass\n";
  using io::csv_number;
  for (const auto &c : r.checks)
    for (const auto &b : c.reports)
      os << b.label << ',' << to_string(b.rule) << ',' << b.process << ',' << b.n << ',' << csv_number(b.time) << ','
         << csv_number(b.lambda) << ',' << csv_number(b.x) << ',' << csv_number(b.p) << ','
         << csv_number(b.estimate) << ',' << csv_number(b.std_error) << ',' << csv_number(b.analytic_bound) << ','
         << csv_number(b.interval_lo) << ',' << csv_number(b.interval_hi) << ',' << csv_number(b.k) << ','
         << b.paths << ',' << (b.pass ? "true" : "false") << '\n';
  return os.str();
}

std::vector<std::string> write_reports(const SuiteResult &r, const std::string &dir, ReportFormat format)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> written;
  const auto write = [&](const std::string &name, const std::string &text) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
      throw ConfigError("cannot write " + path);
    written.push_back(path);
  };
  if (format != ReportFormat::Csv)
    write("report.json", to_json(r).dump(2) + "\n");
  if (format != ReportFormat::Json)
    write("report.csv", reports_csv(r));
  return written;
}

} // namespace selfnorm
