#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfnorm/bounds.hpp"
#include "selfnorm/constants.hpp"
#include "selfnorm/error.hpp"
#include "selfnorm/io.hpp"
#include "selfnorm/mixture.hpp"
#include "selfnorm/processes.hpp"
#include "selfnorm/suite.hpp"

namespace fs = std::filesystem;
using namespace selfnorm;
using io::csv_number;
using io::Json;

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2 };

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string format = "csv";
};

unsigned resolve_workers(const Common &c)
{
  if (c.workers)
    return *c.workers;
  if (const char *env = std::getenv("SELFNORM_WORKERS")) {
    char *end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0 || v > 4096)
      throw ConfigError("SELFNORM_WORKERS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return 1;
}

// A table printed as CSV or as a JSON array of row objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write_csv(std::ostream &os) const
  {
    for (std::size_t i = 0; i < columns.size(); ++i)
      os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto &r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i)
        os << (i ? "," : "") << csv_number(r[i]);
      os << '\n';
    }
  }

  Json to_json() const
  {
    Json a = Json::array();
    for (const auto &r : rows) {
      Json o = Json::object();
      for (std::size_t i = 0; i < r.size(); ++i)
        o[columns[i]] = r[i];
      a.push_back(o);
    }
    return a;
  }
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Writes named tables to <out>/<name>.csv or one <out>/<stem>.json, or to
// stdout when no directory is given.
void emit(const std::vector<std::pair<std::string, Table>> &tables, const Common &c, const std::string &stem)
{
  if (c.format != "csv" && c.format != "json")
    throw ConfigError("--format must be csv or json");
  std::ostringstream text;
  if (c.format == "json") {
    Json j = Json::object();
    for (const auto &[name, t] : tables)
      j[name] = t.to_json();
    text << j.dump(2) << '\n';
  }
  if (c.out.empty()) {
    if (c.format == "json") {
      std::cout << text.str();
      return;
    }
    bool first = true;
    for (const auto &[name, t] : tables) {
      if (!first)
        std::cout << '\n';
      first = false;
      if (tables.size() > 1)
        std::cout << "# " << name << '\n';
      t.write_csv(std::cout);
    }
    return;
  }
  fs::create_directories(c.out);
  if (c.format == "json") {
    std::ofstream(fs::path(c.out) / (stem + ".json"), std::ios::binary) << text.str();
    return;
  }
  for (const auto &[name, t] : tables) {
    std::ofstream f(fs::path(c.out) / (name + ".csv"), std::ios::binary);
    t.write_csv(f);
  }
}

int cmd_constants(const Common &c, const std::vector<double> &lambdas, const std::vector<double> &gammas,
    const std::vector<double> &rs, std::optional<double> alpha, std::optional<double> delta)
{
  std::vector<std::pair<std::string, Table>> out;
  if (!lambdas.empty()) {
    Table t{{"lambda", "h", "b_lambda", "slack_gamma", "a_lambda", "identity_residual"}, {}};
    for (double l : lambdas) {
      const LilConstants k = lil_constants(l);
      const double g = k.slack_gamma;
      const double residual = g * k.limsup / l - g * g * quadratic_slack(g) / (l * l) - 1;
      t.rows.push_back({l, k.root, k.limsup, g, k.upper_scale, residual});
    }
    out.emplace_back("lil_constants", t);
  }
  const std::vector<double> r_list = rs.empty() ? std::vector<double>{2.0} : rs;
  if (!gammas.empty()) {
    Table t{{"gamma", "r", "C_gamma", "c_r_gamma_part", "c_r", "c_gamma_r"}, {}};
    for (double g : gammas)
      for (double r : r_list) {
        const double left = g > 0 ? left_power_slack(g, r) : kNaN;
        const double right = right_power_slack(r);
        const double both = g > 0 ? power_slack(g, r) : kNaN;
        t.rows.push_back({g, r, quadratic_slack(g), left, right, both});
      }
    out.emplace_back("slack_constants", t);
  } else if (!rs.empty()) {
    Table t{{"r", "c_r", "c_r_upper_bound", "lil_limsup"}, {}};
    for (double r : rs)
      t.rows.push_back({r, right_power_slack(r), right_power_slack_bound(r), lil_limsup(r)});
    out.emplace_back("power_constants", t);
  }
  if (alpha || delta) {
    IteratedLogWeight w;
    w.alpha = alpha.value_or(w.alpha);
    w.delta = delta.value_or(w.delta);
    w.beta = iterated_log_normalizer(w.alpha, w.delta);
    const GrowthCheck g = check_growth(w);
    Table t{{"alpha", "delta", "beta", "integral", "max_scale_ratio", "max_square_ratio", "growth_ok"}, {}};
    t.rows.push_back({w.alpha, w.delta, w.beta, iterated_log_integral(w), g.max_scale_ratio, g.max_square_ratio,
        g.ok() ? 1.0 : 0.0});
    out.emplace_back("weight_normalization", t);
  }
  if (out.empty())
    throw CLI::ValidationError("constants", "give at least one of --lambda, --gamma, --r, --alpha, --delta");
  emit(out, c, "constants");
  return kPass;
}

int cmd_boundary(const Common &c, double level, double r, std::vector<double> vs, const std::vector<double> &range,
    bool asymptotic)
{
  if (c.config.empty())
    throw CLI::ValidationError("boundary", "--config <mixture.json> is required");
  if (!(level > 0))
    throw ConfigError("--c must be positive");
  const Json j = io::read_json_file(c.config);
  const MixtureMeasure f = io::mixture_from_json(j);
  if (!range.empty()) {
    if (range.size() != 3 || !(range[0] > 0) || !(range[1] > range[0]) || !(range[2] >= 2))
      throw ConfigError("--v-range needs lo hi count with 0 < lo < hi and count >= 2");
    const auto count = static_cast<int>(range[2]);
    for (int i = 0; i < count; ++i)
      vs.push_back(range[0] * std::pow(range[1] / range[0], static_cast<double>(i) / (count - 1)));
  }
  if (vs.empty())
    throw CLI::ValidationError("boundary", "give --v or --v-range");
  const auto *pm = std::get_if<PointMasses>(&f.kind());
  const bool single_atom = pm && pm->atoms.size() == 1;
  const auto *rs = std::get_if<IteratedLogDensity>(&f.kind());

  Table t{{"v", "c", "boundary", "residual"}, {}};
  if (single_atom)
    t.columns.push_back("closed_form");
  if (asymptotic)
    t.columns.insert(t.columns.end(), {"asymptotic", "ratio"});
  for (double v : vs) {
    const double b = mixture_boundary(v, level, f, r);
    std::vector<double> row{v, level, b, mixture_value(b, v, f, r) / level - 1};
    if (single_atom) {
      const auto &a = pm->atoms[0];
      row.push_back((std::log(level / a.weight) + std::pow(a.lambda, r) * v / r) / a.lambda);
    }
    if (asymptotic) {
      double a = kNaN;
      if (r == 2 && rs)
        a = iterated_log_boundary_asymptotic(v, level, rs->delta);
      else if (r < 2)
        a = power_boundary_asymptotic(v, r);
      row.push_back(a);
      row.push_back(b / a);
    }
    t.rows.push_back(row);
  }
  emit({{"boundary", t}}, c, "boundary");
  return kPass;
}

int cmd_tailbound(const Common &c, const std::vector<double> &xs, const std::vector<double> &ps,
    const std::vector<double> &mgf)
{
  std::vector<std::pair<std::string, Table>> out;
  if (!xs.empty()) {
    Table t{{"x", "tail_bound"}, {}};
    for (double x : xs)
      t.rows.push_back({x, log_corrected_tail_bound(x)});
    out.emplace_back("tail_bounds", t);
  }
  if (!ps.empty()) {
    Table t{{"p", "abs_moment_bound", "log_corrected_moment_bound"}, {}};
    for (double p : ps)
      t.rows.push_back({p, abs_moment_bound(p), log_corrected_moment_bound(p)});
    out.emplace_back("moment_bounds", t);
  }
  if (!mgf.empty()) {
    Table t{{"x", "mgf_bound"}, {}};
    for (double x : mgf)
      t.rows.push_back({x, mgf_bound(x)});
    out.emplace_back("mgf_bounds", t);
  }
  if (out.empty())
    throw CLI::ValidationError("tailbound", "give at least one of --x, --p, --mgf");
  emit(out, c, "tailbound");
  return kPass;
}

int cmd_simulate(const Common &c)
{
  if (c.config.empty())
    throw CLI::ValidationError("simulate", "--config <simulation.json> is required");
  const Json j = io::read_json_file(c.config);
  io::allow_keys(j, {"schema", "description", "process", "seed", "path", "horizon", "checkpoints", "mixture"},
      "simulation");
  if (!j.contains("schema") || j["schema"] != io::kSchema)
    throw ConfigError("simulation config must declare \"schema\": 1");
  if (!j.contains("process"))
    throw ConfigError("simulation config needs \"process\"");
  const ProcessSpec spec = io::process_from_json(j["process"]);
  std::uint64_t seed;
  if (c.seed)
    seed = *c.seed;
  else if (j.contains("seed"))
    seed = io::to_count(j["seed"], "seed");
  else
    throw ConfigError("no seed: pass --seed or set \"seed\" in the config");
  if (!j.contains("horizon"))
    throw ConfigError("simulation config needs \"horizon\"");
  ExperimentConfig cfg;
  cfg.spec = spec;
  cfg.paths = 1;
  cfg.horizon = io::to_count(j["horizon"], "horizon");
  if (j.contains("checkpoints")) {
    if (!j["checkpoints"].is_array())
      throw ConfigError("checkpoints must be an array");
    for (const auto &v : j["checkpoints"])
      cfg.checkpoints.push_back(io::to_count(v, "checkpoint"));
  } else {
    for (std::uint64_t n = 1; n <= cfg.horizon; ++n)
      cfg.checkpoints.push_back(n);
  }
  cfg = validated(cfg);
  const std::uint64_t path = j.contains("path") ? io::to_count(j["path"], "path") : 0;

  const bool mv = std::holds_alternative<spec::MvBrownianGrid>(spec);
  std::optional<GaussianMixture> g;
  if (mv) {
    const int dim = std::get<spec::MvBrownianGrid>(spec).dim;
    g = j.contains("mixture") ? io::gaussian_from_json(j["mixture"])
                              : GaussianMixture(Eigen::MatrixXd::Identity(dim, dim));
    if (g->dim() != dim)
      throw ConfigError("gaussian mixture dimension does not match the process");
  } else if (j.contains("mixture")) {
    throw ConfigError("\"mixture\" is only used with mv_brownian_grid");
  }

  auto prep = std::make_shared<const PreparedSpec>(spec);
  if (cfg.horizon > prep->max_steps())
    throw ConfigError("horizon exceeds the steps supported by " + process_name(spec));
  Process proc(prep, path_seed(seed, path));
  std::optional<GaussianMixtureWorkspace> ws;
  if (g)
    ws.emplace(*g);

  std::ostringstream os;
  os << "n,a_n,b_pow_r,v_n_sq,mu_sum" << (mv ? ",mv_statistic" : "") << '\n';
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= cfg.horizon && next < cfg.checkpoints.size(); ++n) {
    const PathState &st = proc.step();
    if (n != cfg.checkpoints[next])
      continue;
    ++next;
    os << st.n << ',' << csv_number(st.a_n) << ',' << csv_number(st.b_pow_r) << ',' << csv_number(st.v_n_sq) << ','
       << csv_number(st.mu_sum);
    if (mv)
      os << ',' << csv_number(ws->log_value(st.mv_sum, st.mv_qv));
    os << '\n';
  }
  if (c.out.empty()) {
    std::cout << os.str();
  } else {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "path.csv", std::ios::binary) << os.str();
  }
  return kPass;
}

Suite load_suite_for(const Common &c)
{
  if (c.config.empty())
    throw CLI::ValidationError("--config <suite.json> is required");
  return load_suite(io::read_json_file(c.config), c.seed, resolve_workers(c));
}

int cmd_verify(const Common &c)
{
  if (c.out.empty())
    throw CLI::ValidationError("verify", "--out <dir> is required");
  ReportFormat fmt;
  if (c.format == "csv")
    fmt = ReportFormat::Csv;
  else if (c.format == "json")
    fmt = ReportFormat::Json;
  else if (c.format == "both")
    fmt = ReportFormat::Both;
  else
    throw ConfigError("--format must be csv, json or both");
  const Suite suite = load_suite_for(c);
  const SuiteResult result = run_suite(suite);
  write_reports(result, c.out, fmt);
  for (const auto &chk : result.checks)
    for (const auto &r : chk.reports)
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.label << " n=" << r.n << " estimate=" << csv_number(r.estimate)
                << " se=" << csv_number(r.std_error) << " bound=" << csv_number(r.analytic_bound) << '\n';
  std::cout << (result.pass() ? "suite passed" : "suite FAILED") << '\n';
  return result.pass() ? kPass : kFail;
}

int cmd_lil(const Common &c)
{
  Suite suite = load_suite_for(c);
  Table t{{"check", "n", "recorded", "max_q10", "max_median", "max_q90", "max_max", "exceed", "value_median",
              "limsup", "threshold"},
      {}};
  std::vector<std::string> labels;
  bool any = false;
  for (std::size_t i = 0; i < suite.checks.size(); ++i) {
    const SuiteCheck &chk = suite.checks[i];
    if (chk.operation != "lil")
      continue;
    any = true;
    const LilSummary s = lil_track(chk.cfg);
    for (const auto &row : s.rows)
      t.rows.push_back({static_cast<double>(i), static_cast<double>(row.n), static_cast<double>(row.recorded),
          row.max_q10, row.max_median, row.max_q90, row.max_max, static_cast<double>(row.exceed), row.value_median,
          s.limsup, s.threshold});
  }
  if (!any)
    throw ConfigError("the suite contains no lil checks");
  emit({{"lil", t}}, c, "lil");
  return kPass;
}

void add_common(CLI::App *sub, Common &c, bool seeded)
{
  sub->add_option("--config", c.config, "input JSON file");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--format", c.format, "csv or json (verify also accepts both)");
  if (seeded) {
    sub->add_option("--seed", c.seed, "seed, overrides the config file");
    sub->add_option("--workers", c.workers, "worker threads (default: SELFNORM_WORKERS, then 1)")
        ->check(CLI::Range(1u, 4096u));
  }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Constants, bounds, mixture boundaries and Monte Carlo checks for self-normalized processes"};
  app.require_subcommand(1);
  Common common;

  std::vector<double> lambdas, gammas, rs;
  std::optional<double> alpha, delta;
  auto *constants = app.add_subcommand("constants", "slack constants, LIL constants and the iterated-log weight");
  add_common(constants, common, false);
  constants->add_option("--lambda", lambdas, "lambda values for h, b_lambda, a_lambda");
  constants->add_option("--gamma", gammas, "gamma values for the slack constants");
  constants->add_option("--r", rs, "norm orders in (1, 2]");
  constants->add_option("--alpha", alpha, "iterated-log weight shift");
  constants->add_option("--delta", delta, "iterated-log weight exponent surplus");

  double level = 0, r = 2;
  std::vector<double> vs, range;
  bool asymptotic = false;
  auto *boundary = app.add_subcommand("boundary", "mixture boundary over a v grid");
  add_common(boundary, common, false);
  boundary->add_option("--c", level, "crossing level")->required();
  boundary->add_option("--r", r, "norm order")->check(CLI::Range(1.0, 2.0));
  boundary->add_option("--v", vs, "v values");
  boundary->add_option("--v-range", range, "lo hi count, log-spaced")->expected(3);
  boundary->add_flag("--asymptotic", asymptotic, "add the large-v form and the ratio");

  std::vector<double> xs, ps, mgf;
  auto *tail = app.add_subcommand("tailbound", "tail, moment and mgf bounds for the self-normalized statistics");
  add_common(tail, common, false);
  tail->add_option("--x", xs, "tail thresholds");
  tail->add_option("--p", ps, "moment orders");
  tail->add_option("--mgf", mgf, "mgf arguments");

  auto *simulate = app.add_subcommand("simulate", "dump one path at checkpoints");
  add_common(simulate, common, true);
  auto *verify = app.add_subcommand("verify", "run a verification suite and write reports");
  add_common(verify, common, true);
  auto *lil = app.add_subcommand("lil", "LIL tables for the lil checks of a suite");
  add_common(lil, common, true);

  try {
    app.parse(argc, argv);
    if (*constants)
      return cmd_constants(common, lambdas, gammas, rs, alpha, delta);
    if (*boundary)
      return cmd_boundary(common, level, r, vs, range, asymptotic);
    if (*tail)
      return cmd_tailbound(common, xs, ps, mgf);
    if (*simulate)
      return cmd_simulate(common);
    if (*verify)
      return cmd_verify(common);
    if (*lil)
      return cmd_lil(common);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const selfnorm::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
