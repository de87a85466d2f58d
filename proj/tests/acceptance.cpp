// Acceptance suite: one PASS/FAIL line per criterion, with the individual
// checks listed underneath. Tolerances and runtime limits are fixed here.
//
//   selfnorm_acceptance [--criterion N]... [--data DIR]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "selfnorm/bounds.hpp"
#include "selfnorm/constants.hpp"
#include "selfnorm/io.hpp"
#include "selfnorm/mixture.hpp"
#include "selfnorm/suite.hpp"

#ifndef SELFNORM_DATA_DIR
#define SELFNORM_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace selfnorm;
using io::Json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  std::vector<std::pair<bool, std::string>> checks;

  void check(bool ok, const std::string &what) { checks.emplace_back(ok, what); }
  bool pass() const
  {
    for (const auto &c : checks)
      if (!c.first)
        return false;
    return !checks.empty();
  }
};

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string data_dir = SELFNORM_DATA_DIR;

Json load(const std::string &rel) { return io::read_json_file((fs::path(data_dir) / rel).string()); }

SuiteResult run_bundled(const std::string &name, unsigned workers)
{
  return run_suite(load_suite(load("suites/" + name), std::nullopt, workers));
}

const CheckResult &find_check(const SuiteResult &r, const std::string &label)
{
  for (const auto &c : r.checks)
    if (c.label == label)
      return c;
  throw std::runtime_error("suite has no check " + label);
}

// Every report of a check, listed as a sub-line.
void add_reports(Outcome &o, const CheckResult &c)
{
  for (const auto &r : c.reports) {
    std::string where = "n=" + std::to_string(r.n);
    if (!std::isnan(r.lambda))
      where += fmt(" lambda=%g", r.lambda);
    if (!std::isnan(r.x))
      where += fmt(" x=%.6g", r.x);
    if (!std::isnan(r.p))
      where += fmt(" p=%g", r.p);
    std::string bound;
    if (r.rule == BoundReport::Rule::Interval)
      bound = fmt("in [%.4g, %.4g]", r.interval_lo, r.interval_hi);
    else if (!std::isnan(r.analytic_bound))
      bound = fmt("bound %.6g", r.analytic_bound);
    o.check(r.pass, fmt("%s %s [%s] estimate %.6g se %.3g %s", r.label.c_str(), where.c_str(),
                        to_string(r.rule).c_str(), r.estimate, r.std_error, bound.c_str()));
  }
}

// C_gamma as the power series sum_{k >= 2} gamma^(k-2) / k.
double slack_series(double gamma)
{
  long double sum = 0, term = 1;
  for (int k = 2; k < 100000 && term > 1e-30L; ++k) {
    sum += term / k;
    term *= gamma;
  }
  return static_cast<double>(sum);
}

Outcome criterion1()
{
  Outcome o;
  double worst = 0;
  for (int i = 1; i <= 9; ++i)
    worst = std::max(worst, std::fabs(quadratic_slack(0.1 * i) - slack_series(0.1 * i)));
  o.check(worst <= 1e-12, fmt("C_gamma closed form vs series, gamma = 0.1..0.9: max diff %.3g (tol 1e-12)", worst));

  const double c2 = right_power_slack(2);
  o.check(std::fabs(c2 - 0.5) <= 1e-6, fmt("root-found c_2 = %.12f (0.5 +- 1e-6)", c2));

  bool exact = true;
  for (int i = 1; i <= 9; ++i)
    exact &= power_slack(0.1 * i, 2) == quadratic_slack(0.1 * i);
  o.check(exact, "c_{gamma,2} == C_gamma exactly for gamma = 0.1..0.9");

  double res = 0;
  for (double l : {1e-3, 1e-2, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 3.0}) {
    const double h = lil_root(l);
    res = std::max(res, std::fabs(h - std::log1p(h) - l * l));
  }
  o.check(res < 1e-12, fmt("h - log(1 + h) = lambda^2 residual on lambda grid: %.3g (< 1e-12)", res));

  const double b = lil_constants(1e-3).limsup;
  o.check(std::fabs(b - std::sqrt(2.0)) < 1e-3, fmt("|b_0.001 - sqrt 2| = %.3g (< 1e-3)", std::fabs(b - std::sqrt(2.0))));

  for (double l : {0.01, 0.1, 1.0}) {
    const auto k = lil_constants(l);
    const double g = k.slack_gamma;
    const double lhs = g * k.limsup / l - g * g * quadratic_slack(g) / (l * l);
    const double mid = (g * k.root + g + std::log1p(-g)) / (l * l);
    const double err = std::max(std::fabs(lhs - 1), std::fabs(mid - 1));
    o.check(err <= 1e-10, fmt("slack identity at lambda = %g: max |side - 1| = %.3g (tol 1e-10)", l, err));
  }
  return o;
}

Outcome criterion2()
{
  Outcome o;
  const IteratedLogWeight w = make_iterated_log_weight();
  const double integral = iterated_log_integral(w);
  o.check(std::fabs(integral - 0.5) <= 1e-8,
      fmt("alpha = %g, delta = %g, beta = %.15g: integral %.15g (0.5 +- 1e-8)", w.alpha, w.delta, w.beta, integral));
  const GrowthCheck g = check_growth(w);
  o.check(g.max_scale_ratio <= 3,
      fmt("L(cy) <= 3c L(y), y in [1e-6, 1e12], c in [1, 1e6]: max L(cy)/(c L(y)) = %.6g", g.max_scale_ratio));
  o.check(g.max_square_ratio <= 3, fmt("L(y^2) <= 3 L(y), y in [1, 1e12]: max ratio = %.6g", g.max_square_ratio));
  return o;
}

Outcome criterion3()
{
  Outcome o;
  {
    const MixtureMeasure f(PointMasses{{{0.5, 1.0}}});
    double worst = 0;
    for (double v = 1e-2; v <= 1e8; v *= 10)
      for (double c : {1.5, 2.0, 10.0, 1e3}) {
        const double closed = (std::log(c) + 0.125 * v) / 0.5;
        worst = std::max(worst, std::fabs(mixture_boundary(v, c, f) - closed) / std::max(1.0, closed));
      }
    o.check(worst <= 1e-8, fmt("point mass: root vs closed form, max rel diff %.3g (tol 1e-8)", worst));
  }
  const MixtureMeasure rs(IteratedLogDensity{1.0});
  {
    double worst = 0;
    for (double v = 1e-2; v <= 1e10; v *= 10)
      for (double c : {1.5, 2 * std::sqrt(kPi), 10.0, 100.0})
        worst = std::max(worst, std::fabs(mixture_value(mixture_boundary(v, c, rs), v, rs) / c - 1));
    o.check(worst <= 1e-8, fmt("psi round trip on (v, c) grid: max rel error %.3g (tol 1e-8)", worst));
  }
  {
    const double c = 2 * std::sqrt(kPi);
    bool concave = true;
    for (double v = 1; v < 1e9; v *= 2) {
      const double w = 3 * v;
      const double mid = mixture_boundary(2 * v, c, rs);
      concave &= mid >= 0.5 * (mixture_boundary(v, c, rs) + mixture_boundary(w, c, rs)) - 1e-10 * mid;
    }
    o.check(concave, "midpoint concavity of the boundary in v on [1, 1e9]");
  }
  {
    const double c = 2 * std::sqrt(kPi);
    const double r8 = mixture_boundary(1e8, c, rs) / iterated_log_boundary_asymptotic(1e8, c, 1.0);
    const double r6 = mixture_boundary(1e6, c, rs) / iterated_log_boundary_asymptotic(1e6, c, 1.0);
    o.check(r8 >= 0.95 && r8 <= 1.05, fmt("iterated-log density, delta = 1: ratio at v = 1e8 = %.6f (in [0.95, 1.05])", r8));
    o.check(r6 >= 0.90 && r6 <= 1.10, fmt("iterated-log density, delta = 1: ratio at v = 1e6 = %.6f (in [0.90, 1.10])", r6));
    const double rr = mixture_boundary(1e10, c, rs, 1.5) / power_boundary_asymptotic(1e10, 1.5);
    o.check(rr >= 0.9 && rr <= 1.1, fmt("r = 1.5: ratio to leading-order form at v = 1e10 = %.6f (in [0.9, 1.1])", rr));
  }
  return o;
}

// E exp(lambda S_n - lambda^2 n / 2) over all 2^n Rademacher sign patterns.
double enumerate_rademacher(double lambda, int n)
{
  long double total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int s = 2 * std::popcount(mask) - n;
    total += std::exp(static_cast<long double>(lambda) * s - 0.5L * lambda * lambda * n);
  }
  return static_cast<double>(total / (1u << n));
}

Outcome criterion4()
{
  Outcome o;
  const SuiteResult r = run_bundled("suite_supermartingales.json", 1);
  std::size_t points = 0, failed = 0;
  for (const auto &c : r.checks)
    for (const auto &rep : c.reports) {
      ++points;
      if (!rep.pass) {
        ++failed;
        o.check(false, fmt("%s n=%llu lambda=%g: mean %.6g se %.3g exceeds 1", rep.label.c_str(),
                           static_cast<unsigned long long>(rep.n), rep.lambda, rep.estimate, rep.std_error));
      }
    }
  o.check(failed == 0 && points > 0, fmt("%zu certified grid points, mean - 3 se <= 1 at all of them", points));
  bool found = false;
  for (const auto &rep : find_check(r, "rademacher").reports)
    if (rep.n == 10 && rep.lambda == 1.0 && rep.label == "rademacher/exp_supermartingale_mean") {
      found = true;
      const double exact = enumerate_rademacher(1.0, 10);
      const double closed = std::pow(std::cosh(1.0) * std::exp(-0.5), 10);
      o.check(std::fabs(exact - closed) < 1e-14, fmt("enumeration %.15f vs (cosh(1) e^-1/2)^10 %.15f", exact, closed));
      o.check(std::fabs(rep.estimate - exact) <= 3 * rep.std_error,
          fmt("rademacher lambda = 1, n = 10: %.6f vs exact %.6f, |diff| %.4g <= 3 se %.4g (%llu paths)", rep.estimate,
              exact, std::fabs(rep.estimate - exact), 3 * rep.std_error, static_cast<unsigned long long>(rep.paths)));
    }
  o.check(found, "rademacher lambda = 1, n = 10 grid point present");
  return o;
}

Outcome criterion5()
{
  Outcome o;
  const SuiteResult r = run_bundled("suite_tail_bounds.json", 1);
  for (const auto &c : r.checks)
    add_reports(o, c);
  std::vector<double> xs, ps;
  for (const auto &c : r.checks)
    for (const auto &rep : c.reports)
      if (c.label.starts_with("rademacher") && rep.n == 100 && rep.paths == 1000000) {
        if (!std::isnan(rep.x))
          xs.push_back(rep.x);
        if (!std::isnan(rep.p) && rep.label.ends_with("log_corrected_moment"))
          ps.push_back(rep.p);
      }
  o.check(xs == std::vector<double>{std::sqrt(2.0), 2, 2.5, 3}, "rademacher tails at x = sqrt 2, 2, 2.5, 3 with 1e6 paths of n = 100");
  o.check(ps == std::vector<double>{1, 2, 4}, "rademacher moments at p = 1, 2, 4 with 1e6 paths of n = 100");
  return o;
}

Outcome criterion6()
{
  Outcome o;
  const SuiteResult r = run_bundled("suite_crossing.json", 1);
  const auto &rs = find_check(r, "rademacher_rs_mixture");
  for (const auto &rep : rs.reports)
    if (rep.n == 100000 && rep.label.ends_with("/mixture_crossing"))
      o.check(rep.pass && std::fabs(rep.analytic_bound - 0.1) < 1e-15,
          fmt("rademacher + iterated-log mixture, c = 10 F(0, lambda0): frequency %.4f se %.4f <= 0.1 + 3 se (horizon 1e5, %llu paths)",
              rep.estimate, rep.std_error, static_cast<unsigned long long>(rep.paths)));
  const auto &mv = find_check(r, "mv_brownian_gaussian");
  double at4 = NAN, at6 = NAN;
  for (const auto &rep : mv.reports) {
    if (rep.label.ends_with("/gaussian_crossing")) {
      if (rep.time >= 1e4 && rep.time < 1e5)
        at4 = rep.estimate;
      if (rep.time >= 1e6)
        at6 = rep.estimate;
    }
    if (rep.label.ends_with("/gaussian_crossing_interval"))
      o.check(rep.pass && rep.interval_lo == 0.45 && rep.interval_hi == 0.52 && rep.paths == 10000 && rep.time >= 1e6,
          fmt("m = 2, V = I, c = 2: frequency %.4f at t = %.6g in [0.45, 0.52] (%llu paths)", rep.estimate, rep.time,
              static_cast<unsigned long long>(rep.paths)));
  }
  o.check(at6 >= at4, fmt("frequency at t = 1e6 (%.4f) >= frequency at t = 1e4 (%.4f)", at6, at4));
  for (const auto &c : r.checks)
    if (c.label != "rademacher_rs_mixture" && c.label != "mv_brownian_gaussian")
      add_reports(o, c);
  return o;
}

Outcome criterion7()
{
  Outcome o;
  const Json suite = load("suites/suite_lil.json");
  const Json golden = load("golden/lil_oracle.json");
  const SuiteResult r = run_bundled("suite_lil.json", 1);

  const auto &rad = find_check(r, "rademacher_self_normalized");
  for (const auto &rep : rad.reports)
    if (rep.label.ends_with("/lil_exceed_fraction"))
      o.check(rep.pass, fmt("rademacher running max <= sqrt 2 * 1.15 = %.6f by n = %llu: %.0f of %llu paths exceed",
                            rep.analytic_bound, static_cast<unsigned long long>(rep.n), rep.estimate * rep.paths,
                            static_cast<unsigned long long>(rep.paths)));

  Json committed;
  for (const auto &c : golden["checks"])
    if (c["label"] == "rademacher_self_normalized")
      committed = c["max_median_interval"];
  Json declared;
  for (const auto &c : suite["checks"])
    if (c["label"] == "rademacher_self_normalized" && c.contains("expect"))
      declared = c["expect"].value("max_median_interval", Json());
  o.check(!committed.is_null() && committed == declared,
      "suite median interval equals the committed pre-run oracle " + committed.dump());
  bool seen = false;
  for (const auto &rep : rad.reports)
    if (rep.label.ends_with("/lil_running_max_median_oracle")) {
      seen = true;
      o.check(rep.pass, fmt("horizon-end median of running max %.6f in [%.6f, %.6f]", rep.estimate, rep.interval_lo,
                            rep.interval_hi));
    }
  o.check(seen, "median oracle report present");

  const auto trend = [&](const std::string &check, const std::string &suffix, BoundReport::Rule rule, const char *what) {
    for (const auto &rep : find_check(r, check).reports)
      if (rep.label.ends_with(suffix)) {
        std::string s;
        for (double v : rep.series)
          s += fmt("%s%.5g", s.empty() ? "" : ", ", v);
        o.check(rep.pass && rep.rule == rule, fmt("%s across 1e4/1e5/1e6: medians %s", what, s.c_str()));
        return;
      }
    o.check(false, std::string(what) + ": report missing");
  };
  trend("three_point_jump_uncentered", "/lil_value_median_trend", BoundReport::Rule::Increasing,
      "uncentered three-point statistic strictly increasing");
  trend("three_point_truncated_normalizers", "/growth_cond_var_trend", BoundReport::Rule::Decreasing,
      "conditional-variance normalized statistic decreasing");
  return o;
}

std::string slurp(const fs::path &p)
{
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Outcome criterion8()
{
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("selfnorm_acceptance_" + std::to_string(::getpid()));
  for (const char *name :
      {"suite_supermartingales.json", "suite_tail_bounds.json", "suite_crossing.json", "suite_lil.json"}) {
    std::vector<std::string> files[2];
    const unsigned workers[2] = {1, 4};
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / (std::string(name) + "_w" + std::to_string(workers[k]));
      for (const auto &f : write_reports(run_bundled(name, workers[k]), dir.string(), ReportFormat::Both))
        files[k].push_back(slurp(f));
    }
    o.check(files[0].size() == 2 && files[0] == files[1],
        fmt("%s: report.json and report.csv byte-identical at --workers 1 and 4", name));
  }
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char *title;
  double limit_s; // 0: no runtime limit
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--criterion", only, "run only these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_option("--data", data_dir, "data directory with suites/ and golden/");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "constant identities", 1, criterion1},
      {2, "iterated-log weight normalization", 5, criterion2},
      {3, "boundary engine", 30, criterion3},
      {4, "supermartingale means", 120, criterion4},
      {5, "log-corrected tail and moment bounds", 120, criterion5},
      {6, "crossing probabilities", 300, criterion6},
      {7, "iterated-logarithm properties", 300, criterion7},
      {8, "determinism across worker counts", 0, criterion8},
  };

  bool ok = true;
  for (const auto &c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o.check(false, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0)
      o.check(secs < c.limit_s, fmt("runtime %.2f s (limit %g s)", secs, c.limit_s));
    const bool pass = o.pass();
    ok &= pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << fmt(" (%.2f s)", secs) << "\n";
    for (const auto &[good, what] : o.checks)
      std::cout << "    " << (good ? "ok   " : "FAIL ") << what << "\n";
    std::cout.flush();
  }
  return ok ? 0 : 1;
}
