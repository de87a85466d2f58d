#include "selfnorm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "selfnorm/bounds.hpp"
#include "selfnorm/error.hpp"

namespace selfnorm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Prepared = std::shared_ptr<const PreparedSpec>;

// Runs fn(process, row) once per path and returns the paths x width row
// matrix. Paths are grouped in fixed blocks handed out to workers; every
// path owns its substream and its row, so the result does not depend on the
// number of workers.
template <typename Fn>
std::vector<double> run_paths(const ExperimentConfig &cfg, const Prepared &prep,
    std::size_t width, Fn fn)
{
  std::vector<double> rows(cfg.paths * width, kNaN);
  const std::uint64_t bs = cfg.block_size;
  const std::uint64_t blocks = (cfg.paths + bs - 1) / bs;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks)
        return;
      try {
        const std::uint64_t last = std::min(cfg.paths, (b + 1) * bs);
        for (std::uint64_t path = b * bs; path < last; ++path) {
          Process proc(prep, path_seed(cfg.seed, path));
          for (const auto &t : cfg.trackers)
            proc.track_truncated(t);
          fn(proc, rows.data() + path * width);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };

  const auto threads = static_cast<std::uint64_t>(std::min<std::uint64_t>(cfg.workers, blocks));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::uint64_t i = 1; i < threads; ++i)
      pool.emplace_back(work);
    work();
    for (auto &t : pool)
      t.join();
  }
  if (error)
    std::rethrow_exception(error);
  return rows;
}

// Steps a process to the horizon, calling at_step(state) after every step
// and at_checkpoint(j, state) after checkpoint j; at_step returning false
// stops early and fills the remaining checkpoints through at_checkpoint.
template <typename Step, typename Check>
void walk(Process &proc, const ExperimentConfig &cfg, Step at_step, Check at_checkpoint)
{
  std::size_t j = 0;
  const auto &cps = cfg.checkpoints;
  for (std::uint64_t n = 1; n <= cfg.horizon && j < cps.size(); ++n) {
    const PathState &st = proc.step();
    const bool more = at_step(st);
    if (n == cps[j])
      at_checkpoint(j++, st);
    if (!more) {
      for (; j < cps.size(); ++j)
        at_checkpoint(j, st);
      return;
    }
  }
}

struct MeanSe {
  double mean;
  double se;
};

MeanSe column_mean(const std::vector<double> &rows, std::size_t width, std::size_t col)
{
  const std::size_t n = rows.size() / width;
  CompensatedSum sum;
  for (std::size_t i = 0; i < n; ++i)
    sum += rows[i * width + col];
  const double mean = sum.value() / static_cast<double>(n);
  if (n < 2 || !std::isfinite(mean))
    return {mean, n < 2 ? 0.0 : kNaN};
  CompensatedSum sq;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = rows[i * width + col] - mean;
    sq += d * d;
  }
  const double var = sq.value() / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

MeanSe frequency(std::uint64_t hits, std::uint64_t n)
{
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1 - p) / static_cast<double>(n))};
}

std::vector<double> column(const std::vector<double> &rows, std::size_t width, std::size_t col)
{
  std::vector<double> out;
  out.reserve(rows.size() / width);
  for (std::size_t i = col; i < rows.size(); i += width)
    if (!std::isnan(rows[i]))
      out.push_back(rows[i]);
  return out;
}

bool on_grid(const ProcessSpec &s)
{
  return std::holds_alternative<spec::BrownianGrid>(s) || std::holds_alternative<spec::MvBrownianGrid>(s);
}

double grid_time(const ProcessSpec &s, std::uint64_t n)
{
  if (const auto *b = std::get_if<spec::BrownianGrid>(&s))
    return b->grid.time(n);
  if (const auto *m = std::get_if<spec::MvBrownianGrid>(&s))
    return m->grid.time(n);
  return kNaN;
}

BoundReport base_report(const ExperimentConfig &cfg, const std::string &suffix)
{
  BoundReport r;
  r.label = cfg.label.empty() ? suffix : cfg.label + "/" + suffix;
  r.process = process_name(cfg.spec);
  r.paths = cfg.paths;
  r.k = cfg.k;
  return r;
}

void place(BoundReport &r, const ExperimentConfig &cfg, std::uint64_t n)
{
  r.n = n;
  if (on_grid(cfg.spec))
    r.time = grid_time(cfg.spec, n);
}

void require_all_real(const PreparedSpec &prep, const char *what)
{
  if (prep.certification().kind != Certification::Kind::AllReal) {
    std::ostringstream os;
    os << what << " needs a process certified for every real lambda; "
       << process_name(prep.spec()) << " is not";
    throw CertificationError(os.str());
  }
}

double safe_loglog(double x)
{
  return std::log(std::log(std::max(x, kIteratedLogFloor)));
}

// The selected LIL statistic at the current state, NaN while gated.
double lil_value(LilStatistic s, const PathState &st, double r)
{
  switch (s) {
  case LilStatistic::Compensator: {
    const double b = std::pow(st.b_pow_r, 1 / r);
    if (!(b >= kIteratedLogFloor))
      return kNaN;
    return lil_statistic(st.a_n, b, r);
  }
  case LilStatistic::SelfNormalized: {
    const double v = std::sqrt(st.v_n_sq);
    if (!(v >= kIteratedLogFloor))
      return kNaN;
    return lil_statistic(st.a_n, v);
  }
  case LilStatistic::FloorSelfNormalized:
    return lil_statistic(st.a_n, std::sqrt(st.v_n_sq));
  case LilStatistic::Universal: {
    const double v = std::sqrt(st.v_n_sq);
    if (!(v >= kIteratedLogFloor))
      return kNaN;
    return universal_statistic(st.a_n, st.mu_sum, v);
  }
  case LilStatistic::ConditionalVariance:
    return lil_statistic(st.a_n, std::sqrt(st.cond_var));
  }
  return kNaN;
}

double lil_bound(LilStatistic s, const PreparedSpec &prep)
{
  switch (s) {
  case LilStatistic::Compensator:
    return lil_limsup(prep.certification().r);
  case LilStatistic::SelfNormalized:
  case LilStatistic::FloorSelfNormalized:
    return std::sqrt(2.0);
  case LilStatistic::Universal:
    if (!std::holds_alternative<spec::TruncatedCentering>(prep.spec()))
      throw ConfigError("the universal statistic needs a truncated_centering process");
    return prep.lil().limsup;
  case LilStatistic::ConditionalVariance:
    return kNaN;
  }
  return kNaN;
}

Prepared prepare(const ExperimentConfig &cfg)
{
  auto prep = std::make_shared<const PreparedSpec>(cfg.spec);
  if (cfg.horizon > prep->max_steps()) {
    std::ostringstream os;
    os << "horizon " << cfg.horizon << " exceeds the " << prep->max_steps() << " steps supported by "
       << process_name(cfg.spec);
    throw ConfigError(os.str());
  }
  return prep;
}

std::string format_number(double v)
{
  std::ostringstream os;
  os << v;
  return os.str();
}

} // namespace

std::string to_string(LilStatistic s)
{
  switch (s) {
  case LilStatistic::Compensator:
    return "compensator";
  case LilStatistic::SelfNormalized:
    return "self_normalized";
  case LilStatistic::FloorSelfNormalized:
    return "floor_self_normalized";
  case LilStatistic::Universal:
    return "universal";
  case LilStatistic::ConditionalVariance:
    return "conditional_variance";
  }
  return "?";
}

LilStatistic lil_statistic_from_string(const std::string &s)
{
  for (auto v : {LilStatistic::Compensator, LilStatistic::SelfNormalized, LilStatistic::FloorSelfNormalized,
           LilStatistic::Universal, LilStatistic::ConditionalVariance})
    if (to_string(v) == s)
      return v;
  throw ConfigError("unknown statistic '" + s + "'");
}

std::string to_string(BoundReport::Rule r)
{
  using R = BoundReport::Rule;
  switch (r) {
  case R::Upper:
    return "upper";
  case R::Interval:
    return "interval";
  case R::Never:
    return "never";
  case R::Below:
    return "below";
  case R::Increasing:
    return "increasing";
  case R::Decreasing:
    return "decreasing";
  case R::NonDecreasing:
    return "non_decreasing";
  case R::Diagnostic:
    return "diagnostic";
  }
  return "?";
}

void apply_rule(BoundReport &r)
{
  using R = BoundReport::Rule;
  const auto &s = r.series;
  switch (r.rule) {
  case R::Upper:
    r.pass = r.estimate - r.k * r.std_error <= r.analytic_bound;
    break;
  case R::Interval:
    r.pass = r.interval_lo <= r.estimate && r.estimate <= r.interval_hi;
    break;
  case R::Never:
    r.pass = r.estimate == 0;
    break;
  case R::Below:
    r.pass = r.estimate < r.analytic_bound;
    break;
  case R::Increasing:
    r.pass = s.size() >= 2 && std::adjacent_find(s.begin(), s.end(), [](double a, double b) { return !(a < b); }) == s.end();
    break;
  case R::Decreasing:
    r.pass = s.size() >= 2 && std::adjacent_find(s.begin(), s.end(), [](double a, double b) { return !(a > b); }) == s.end();
    break;
  case R::NonDecreasing:
    r.pass = s.size() >= 2 && std::adjacent_find(s.begin(), s.end(), [](double a, double b) { return !(a <= b); }) == s.end();
    break;
  case R::Diagnostic:
    r.pass = true;
    break;
  }
}

ExperimentConfig validated(ExperimentConfig cfg)
{
  if (cfg.paths == 0)
    throw ConfigError("paths must be positive");
  if (cfg.horizon == 0)
    throw ConfigError("horizon must be positive");
  if (cfg.block_size == 0)
    throw ConfigError("block_size must be positive");
  if (cfg.workers == 0)
    throw ConfigError("workers must be positive");
  if (!(cfg.k >= 0))
    throw ConfigError("k must be nonnegative");
  if (!(cfg.lil_margin >= 0))
    throw ConfigError("lil_margin must be nonnegative");
  if (cfg.checkpoints.empty())
    cfg.checkpoints = {cfg.horizon};
  for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
    const auto c = cfg.checkpoints[i];
    if (c == 0 || c > cfg.horizon)
      throw ConfigError("checkpoints must lie in [1, horizon]");
    if (i > 0 && !(cfg.checkpoints[i - 1] < c))
      throw ConfigError("checkpoints must be strictly increasing");
  }
  for (auto &t : cfg.trackers)
    t = prepare_tracking(std::move(t));
  return cfg;
}

double median(std::vector<double> v)
{
  if (v.empty())
    return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double quantile(std::vector<double> v, double q)
{
  if (v.empty())
    return kNaN;
  if (!(q >= 0 && q <= 1))
    throw DomainError("quantile level must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<BoundReport> check_supermartingale_mean(const ExperimentConfig &raw)
{
  const ExperimentConfig cfg = validated(raw);
  const Prepared prep = prepare(cfg);
  {
    Process probe(prep, 0);
    for (double lambda : cfg.lambda_grid)
      probe.log_exp_supermartingale(lambda);
  }
  const std::size_t nl = cfg.lambda_grid.size(), nt = cfg.trackers.size();
  const std::size_t per_cp = nl + nt, ncp = cfg.checkpoints.size();
  const auto rows = run_paths(cfg, prep, per_cp * ncp, [&](Process &proc, double *row) {
    walk(
        proc, cfg, [](const PathState &) { return true; },
        [&](std::size_t j, const PathState &) {
          double *out = row + j * per_cp;
          for (std::size_t i = 0; i < nl; ++i)
            out[i] = std::exp(proc.log_exp_supermartingale(cfg.lambda_grid[i]));
          for (std::size_t i = 0; i < nt; ++i)
            out[nl + i] = proc.truncated_supermartingale_value(i);
        });
  });

  std::vector<BoundReport> out;
  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = 0; j < ncp; ++j) {
      BoundReport r = base_report(cfg, "exp_supermartingale_mean");
      r.rule = BoundReport::Rule::Upper;
      r.analytic_bound = 1;
      r.lambda = cfg.lambda_grid[i];
      place(r, cfg, cfg.checkpoints[j]);
      const auto m = column_mean(rows, per_cp * ncp, j * per_cp + i);
      r.estimate = m.mean;
      r.std_error = m.se;
      apply_rule(r);
      out.push_back(r);
    }
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < ncp; ++j) {
      const auto &t = cfg.trackers[i];
      std::ostringstream name;
      name << "truncated_supermartingale_mean[gamma=" << format_number(t.gamma)
           << ";r=" << format_number(t.r) << ";scale=" << format_number(t.scale) << "]";
      BoundReport r = base_report(cfg, name.str());
      r.rule = BoundReport::Rule::Upper;
      r.analytic_bound = 1;
      r.lambda = t.lambda;
      place(r, cfg, cfg.checkpoints[j]);
      const auto m = column_mean(rows, per_cp * ncp, j * per_cp + nl + i);
      r.estimate = m.mean;
      r.std_error = m.se;
      apply_rule(r);
      out.push_back(r);
    }
  return out;
}

namespace {

// (A_n, B_n) at the horizon for r = 2 processes certified for all lambda.
std::vector<double> endpoints(const ExperimentConfig &cfg, const Prepared &prep, const char *what)
{
  require_all_real(*prep, what);
  return run_paths(cfg, prep, 2, [&](Process &proc, double *row) {
    for (std::uint64_t n = 0; n < cfg.horizon; ++n)
      proc.step();
    row[0] = proc.state().a_n;
    row[1] = std::sqrt(proc.state().b_pow_r);
  });
}

} // namespace

std::vector<BoundReport> validate_tail_bound(const ExperimentConfig &raw, double y)
{
  const ExperimentConfig cfg = validated(raw);
  if (!(y > 0))
    throw ConfigError("tail bound needs y > 0");
  const Prepared prep = prepare(cfg);
  const auto rows = endpoints(cfg, prep, "the tail bound");
  std::vector<double> stat(cfg.paths);
  for (std::uint64_t i = 0; i < cfg.paths; ++i)
    stat[i] = log_corrected_statistic({rows[2 * i], rows[2 * i + 1], 2}, y);

  std::vector<BoundReport> out;
  for (double x : cfg.x_grid) {
    BoundReport r = base_report(cfg, "log_corrected_tail");
    r.rule = BoundReport::Rule::Upper;
    r.analytic_bound = log_corrected_tail_bound(x);
    r.x = x;
    place(r, cfg, cfg.horizon);
    const auto hits = static_cast<std::uint64_t>(std::count_if(stat.begin(), stat.end(), [x](double s) { return s >= x; }));
    const auto f = frequency(hits, cfg.paths);
    r.estimate = f.mean;
    r.std_error = f.se;
    apply_rule(r);
    out.push_back(r);
  }
  return out;
}

std::vector<BoundReport> validate_moment_bound(const ExperimentConfig &raw,
    const std::vector<double> &p_list, double y)
{
  const ExperimentConfig cfg = validated(raw);
  if (!(y > 0))
    throw ConfigError("moment bound needs y > 0");
  for (double p : p_list)
    if (!(p > 0) || p > 100)
      throw ConfigError("moment orders must lie in (0, 100]");
  const Prepared prep = prepare(cfg);
  const auto rows = endpoints(cfg, prep, "the moment bound");
  const double mean_b = column_mean(rows, 2, 1).mean;

  std::vector<BoundReport> out;
  const std::size_t n = cfg.paths;
  std::vector<double> vals(n);
  for (double p : p_list) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rows[2 * i], b = rows[2 * i + 1];
      vals[i] = std::pow(std::fabs(a) / std::sqrt(b * b + mean_b * mean_b), p);
    }
    BoundReport r = base_report(cfg, "abs_moment");
    r.rule = BoundReport::Rule::Upper;
    r.analytic_bound = abs_moment_bound(p);
    r.p = p;
    place(r, cfg, cfg.horizon);
    auto m = column_mean(vals, 1, 0);
    r.estimate = m.mean;
    r.std_error = m.se;
    apply_rule(r);
    out.push_back(r);

    for (std::size_t i = 0; i < n; ++i)
      vals[i] = std::pow(log_corrected_statistic({rows[2 * i], rows[2 * i + 1], 2}, y), p);
    BoundReport s = base_report(cfg, "log_corrected_moment");
    s.rule = BoundReport::Rule::Upper;
    s.analytic_bound = log_corrected_moment_bound(p);
    s.p = p;
    place(s, cfg, cfg.horizon);
    m = column_mean(vals, 1, 0);
    s.estimate = m.mean;
    s.std_error = m.se;
    apply_rule(s);
    out.push_back(s);
  }
  return out;
}

BoundReport check_integrand_mean(const ExperimentConfig &raw, double y)
{
  const ExperimentConfig cfg = validated(raw);
  if (!(y > 0))
    throw ConfigError("integrand check needs y > 0");
  const Prepared prep = prepare(cfg);
  const auto rows = endpoints(cfg, prep, "the mixture integrand check");
  std::vector<double> vals(cfg.paths);
  for (std::uint64_t i = 0; i < cfg.paths; ++i)
    vals[i] = mixture_integrand({rows[2 * i], rows[2 * i + 1], 2}, y);
  BoundReport r = base_report(cfg, "mixture_integrand_mean");
  r.rule = BoundReport::Rule::Upper;
  r.analytic_bound = 1;
  place(r, cfg, cfg.horizon);
  const auto m = column_mean(vals, 1, 0);
  r.estimate = m.mean;
  r.std_error = m.se;
  apply_rule(r);
  return r;
}

namespace {

// Boundary values on a log-spaced grid of v. The boundary is increasing in v,
// so the grid values bracket it between nodes and the exact mixture value is
// only needed when A falls inside that bracket.
class BoundaryTable {
public:
  explicit BoundaryTable(const MixtureCrossing &src) : src_(src), log_c_(std::log(src.c))
  {
    if (!(src.table_lo > 0) || !(src.table_hi > src.table_lo) || src.table_per_decade < 1)
      throw ConfigError("invalid boundary table range");
    const double lo = std::log10(src.table_lo), hi = std::log10(src.table_hi);
    const auto count = static_cast<std::size_t>(std::ceil((hi - lo) * src.table_per_decade)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      const double v = std::pow(10.0, std::min(hi, lo + static_cast<double>(i) / src.table_per_decade));
      v_.push_back(v);
      beta_.push_back(mixture_boundary(v, src.c, src.measure, src.r));
    }
  }

  bool crossed(double u, double v, std::size_t &cursor) const
  {
    if (!(v >= v_.front() && v <= v_.back()))
      return exact(u, v);
    if (cursor + 1 >= v_.size() || v < v_[cursor])
      cursor = 0;
    while (cursor + 2 < v_.size() && v_[cursor + 1] < v)
      ++cursor;
    const double lo = beta_[cursor], hi = beta_[cursor + 1];
    if (u < lo - kPad * (1 + std::fabs(lo)))
      return false;
    if (u > hi + kPad * (1 + std::fabs(hi)))
      return true;
    return exact(u, v);
  }

private:
  static constexpr double kPad = 1e-9;

  bool exact(double u, double v) const
  {
    return log_mixture_value(u, v, src_.measure, src_.r) >= log_c_;
  }

  const MixtureCrossing &src_;
  double log_c_;
  std::vector<double> v_, beta_;
};

std::vector<BoundReport> crossing_reports(const ExperimentConfig &cfg, const std::vector<double> &rows,
    double bound, const char *name)
{
  const std::size_t ncp = cfg.checkpoints.size();
  std::vector<BoundReport> out;
  std::vector<double> series;
  for (std::size_t j = 0; j < ncp; ++j) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < cfg.paths; ++i)
      hits += rows[i * ncp + j] > 0;
    BoundReport r = base_report(cfg, name);
    r.rule = BoundReport::Rule::Upper;
    r.analytic_bound = bound;
    place(r, cfg, cfg.checkpoints[j]);
    const auto f = frequency(hits, cfg.paths);
    r.estimate = f.mean;
    r.std_error = f.se;
    apply_rule(r);
    out.push_back(r);
    series.push_back(f.mean);
  }
  if (ncp >= 2) {
    BoundReport r = base_report(cfg, std::string(name) + "_monotone");
    r.rule = BoundReport::Rule::NonDecreasing;
    r.series = series;
    r.estimate = series.back();
    place(r, cfg, cfg.checkpoints.back());
    apply_rule(r);
    out.push_back(r);
  }
  return out;
}

} // namespace

std::vector<BoundReport> crossing_frequency(const ExperimentConfig &raw, const MixtureCrossing &src)
{
  const ExperimentConfig cfg = validated(raw);
  if (!(src.c > 0))
    throw ConfigError("crossing level c must be positive");
  const Prepared prep = prepare(cfg);
  const auto &cert = prep->certification();
  const bool ok = cert.kind == Certification::Kind::AllReal
      ? src.r == 2
      : cert.kind == Certification::Kind::Restricted && cert.r == src.r && cert.covers(src.measure.support_upper());
  if (!ok) {
    std::ostringstream os;
    os << "mixture support up to " << src.measure.support_upper() << " with r = " << src.r
       << " is not covered by the certificate of " << process_name(cfg.spec);
    throw CertificationError(os.str());
  }
  const BoundaryTable table(src);
  const std::size_t ncp = cfg.checkpoints.size();
  const auto rows = run_paths(cfg, prep, ncp, [&](Process &proc, double *row) {
    std::size_t cursor = 0;
    bool hit = false;
    walk(
        proc, cfg,
        [&](const PathState &st) {
          hit = table.crossed(st.a_n, st.b_pow_r, cursor);
          return !hit;
        },
        [&](std::size_t j, const PathState &) { row[j] = hit ? 1 : 0; });
  });
  return crossing_reports(cfg, rows, crossing_probability_bound(src.c, src.measure), "mixture_crossing");
}

std::vector<BoundReport> crossing_frequency(const ExperimentConfig &raw, const GaussianCrossing &src)
{
  const ExperimentConfig cfg = validated(raw);
  if (!(src.c > 1))
    throw ConfigError("gaussian crossing level c must exceed 1");
  const Prepared prep = prepare(cfg);
  const auto *mv = std::get_if<spec::MvBrownianGrid>(&cfg.spec);
  if (mv) {
    if (mv->dim != src.mixture.dim())
      throw ConfigError("gaussian mixture dimension does not match the process");
  } else {
    require_all_real(*prep, "a one-dimensional gaussian mixture");
    if (src.mixture.dim() != 1)
      throw ConfigError("scalar processes need a one-dimensional gaussian mixture");
  }
  const std::size_t ncp = cfg.checkpoints.size();
  const auto rows = run_paths(cfg, prep, ncp, [&](Process &proc, double *row) {
    GaussianMixtureWorkspace ws(src.mixture);
    Eigen::VectorXd s(1);
    Eigen::MatrixXd q(1, 1);
    bool hit = false;
    walk(
        proc, cfg,
        [&](const PathState &st) {
          if (mv) {
            hit = ws.crosses(st.mv_sum, st.mv_qv, src.c);
          } else {
            s(0) = st.a_n;
            q(0, 0) = st.b_pow_r;
            hit = ws.crosses(s, q, src.c);
          }
          return !hit;
        },
        [&](std::size_t j, const PathState &) { row[j] = hit ? 1 : 0; });
  });
  auto out = crossing_reports(cfg, rows, 1 / src.c, "gaussian_crossing");
  if (src.interval) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < cfg.paths; ++i)
      hits += rows[i * ncp + ncp - 1] > 0;
    BoundReport r = base_report(cfg, "gaussian_crossing_interval");
    r.rule = BoundReport::Rule::Interval;
    r.interval_lo = src.interval->first;
    r.interval_hi = src.interval->second;
    r.analytic_bound = 1 / src.c;
    place(r, cfg, cfg.checkpoints.back());
    const auto f = frequency(hits, cfg.paths);
    r.estimate = f.mean;
    r.std_error = f.se;
    apply_rule(r);
    out.push_back(r);
  }
  return out;
}

LilSummary lil_track(const ExperimentConfig &raw)
{
  const ExperimentConfig cfg = validated(raw);
  const Prepared prep = prepare(cfg);
  LilSummary summary;
  summary.statistic = cfg.statistic;
  summary.limsup = lil_bound(cfg.statistic, *prep);
  summary.threshold = summary.limsup * (1 + cfg.lil_margin);
  const double r = prep->certification().r;
  const std::size_t ncp = cfg.checkpoints.size();
  const auto rows = run_paths(cfg, prep, 2 * ncp, [&](Process &proc, double *row) {
    double running = kNaN;
    double current = kNaN;
    walk(
        proc, cfg,
        [&](const PathState &st) {
          current = lil_value(cfg.statistic, st, r);
          if (!std::isnan(current) && !(running >= current))
            running = current;
          return true;
        },
        [&](std::size_t j, const PathState &) {
          row[2 * j] = running;
          row[2 * j + 1] = current;
        });
  });
  for (std::size_t j = 0; j < ncp; ++j) {
    const auto maxima = column(rows, 2 * ncp, 2 * j);
    LilRow row{};
    row.n = cfg.checkpoints[j];
    row.recorded = maxima.size();
    row.max_q10 = quantile(maxima, 0.1);
    row.max_median = median(maxima);
    row.max_q90 = quantile(maxima, 0.9);
    row.max_max = maxima.empty() ? kNaN : *std::max_element(maxima.begin(), maxima.end());
    row.exceed = std::isnan(summary.threshold)
        ? 0
        : static_cast<std::uint64_t>(std::count_if(maxima.begin(), maxima.end(),
              [&](double m) { return m > summary.threshold; }));
    row.value_median = median(column(rows, 2 * ncp, 2 * j + 1));
    summary.rows.push_back(row);
  }
  summary.final_maxima = column(rows, 2 * ncp, 2 * (ncp - 1));
  return summary;
}

double ClusterHistogram::interior_coverage(double limit) const
{
  const std::size_t bins = edges.size() - 1;
  std::size_t interior = 0, visited = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (!(edges[b] >= -limit && edges[b + 1] <= limit))
      continue;
    ++interior;
    std::uint64_t total = 0;
    for (const auto &w : windows)
      total += w.counts[b];
    visited += total > 0;
  }
  return interior ? static_cast<double>(visited) / static_cast<double>(interior) : kNaN;
}

ClusterHistogram cluster_set_diagnostic(const ExperimentConfig &raw, int bins)
{
  const ExperimentConfig cfg = validated(raw);
  if (bins < 1)
    throw ConfigError("histogram needs at least one bin");
  const Prepared prep = prepare(cfg);
  const double r = prep->certification().r;
  const std::size_t nb = static_cast<std::size_t>(bins), ncp = cfg.checkpoints.size();
  const std::size_t per_window = nb + 2;
  const auto rows = run_paths(cfg, prep, per_window * ncp, [&](Process &proc, double *row) {
    std::fill(row, row + per_window * ncp, 0.0);
    std::size_t window = 0;
    for (std::uint64_t n = 1; n <= cfg.checkpoints.back(); ++n) {
      const double v = lil_value(cfg.statistic, proc.step(), r);
      if (!std::isnan(v)) {
        double *w = row + window * per_window;
        if (v < -2)
          w[nb] += 1;
        else if (v >= 2)
          w[nb + 1] += 1;
        else
          w[std::min(nb - 1, static_cast<std::size_t>((v + 2) / 4 * static_cast<double>(nb)))] += 1;
      }
      if (n == cfg.checkpoints[window])
        ++window;
    }
  });
  ClusterHistogram h;
  for (std::size_t b = 0; b <= nb; ++b)
    h.edges.push_back(-2 + 4 * static_cast<double>(b) / static_cast<double>(nb));
  std::uint64_t from = 0;
  for (std::size_t j = 0; j < ncp; ++j) {
    ClusterWindow w{from, cfg.checkpoints[j], std::vector<std::uint64_t>(nb, 0), 0, 0};
    for (std::uint64_t i = 0; i < cfg.paths; ++i) {
      const double *src = rows.data() + i * per_window * ncp + j * per_window;
      for (std::size_t b = 0; b < nb; ++b)
        w.counts[b] += static_cast<std::uint64_t>(src[b]);
      w.below += static_cast<std::uint64_t>(src[nb]);
      w.above += static_cast<std::uint64_t>(src[nb + 1]);
    }
    from = cfg.checkpoints[j];
    h.windows.push_back(std::move(w));
  }
  return h;
}

std::vector<BoundReport> sup_moment_estimate(const ExperimentConfig &raw, const SupFunctional &f)
{
  const ExperimentConfig cfg = validated(raw);
  if (!(f.value > 0))
    throw ConfigError("sup functional needs a positive exponent");
  if (f.kind == SupFunctional::Kind::Exponential && !(f.value < 0.5))
    throw ConfigError("the exponential functional needs alpha < 1/2");
  if (!(f.r > 1 && f.r <= 2))
    throw ConfigError("sup functional needs 1 < r <= 2");
  const Prepared prep = prepare(cfg);
  const std::size_t ncp = cfg.checkpoints.size();
  const auto rows = run_paths(cfg, prep, ncp, [&](Process &proc, double *row) {
    CompensatedSum power_sum;
    double sup = 0; // sup of the statistic (Power) or of its square (Exponential)
    walk(
        proc, cfg,
        [&](const PathState &st) {
          double num = 0, den = 0;
          if (f.normalizer == SupFunctional::Normalizer::PowerSum) {
            power_sum += std::pow(std::fabs(st.last), f.r);
            const double p = power_sum.value();
            den = std::pow(std::max(p, 1.0) * std::pow(safe_loglog(p), f.r - 1), 1 / f.r);
          } else {
            const double q = f.normalizer == SupFunctional::Normalizer::Compensator ? st.b_pow_r : st.v_n_sq;
            if (!(q > 0))
              return true;
            den = std::sqrt(q * safe_loglog(q));
          }
          if (f.kind == SupFunctional::Kind::Power) {
            num = std::max(st.a_n, 0.0);
            sup = std::max(sup, num / den);
          } else {
            num = st.a_n / den;
            sup = std::max(sup, num * num);
          }
          return true;
        },
        [&](std::size_t j, const PathState &) {
          row[j] = f.kind == SupFunctional::Kind::Power ? std::pow(sup, f.value) : std::exp(f.value * sup);
        });
  });
  std::vector<BoundReport> out;
  std::vector<double> series;
  const char *name = f.kind == SupFunctional::Kind::Power ? "sup_power_moment" : "sup_exponential_moment";
  for (std::size_t j = 0; j < ncp; ++j) {
    BoundReport r = base_report(cfg, name);
    r.rule = BoundReport::Rule::Diagnostic;
    r.p = f.value;
    place(r, cfg, cfg.checkpoints[j]);
    const auto m = column_mean(rows, ncp, j);
    r.estimate = m.mean;
    r.std_error = m.se;
    apply_rule(r);
    out.push_back(r);
    series.push_back(m.mean);
  }
  if (ncp >= 2) {
    BoundReport r = base_report(cfg, std::string(name) + "_stability");
    r.rule = BoundReport::Rule::Below;
    r.analytic_bound = 0.1;
    r.p = f.value;
    r.series = series;
    const double prev = series[ncp - 2], last = series[ncp - 1];
    r.estimate = std::fabs(last - prev) / prev;
    place(r, cfg, cfg.checkpoints.back());
    apply_rule(r);
    out.push_back(r);
  }
  return out;
}

std::vector<GrowthRow> growth_rate_diagnostic(const ExperimentConfig &raw)
{
  const ExperimentConfig cfg = validated(raw);
  if (!std::holds_alternative<spec::ThreePointTruncated>(cfg.spec)
      && !std::holds_alternative<spec::ThreePointJump>(cfg.spec))
    throw ConfigError("growth rate diagnostic needs a three-point process");
  const Prepared prep = prepare(cfg);
  const std::size_t ncp = cfg.checkpoints.size();
  const auto rows = run_paths(cfg, prep, 3 * ncp, [&](Process &proc, double *row) {
    walk(
        proc, cfg, [](const PathState &) { return true; },
        [&](std::size_t j, const PathState &st) {
          const double v = std::sqrt(st.v_n_sq), s = std::sqrt(st.cond_var);
          row[3 * j] = lil_statistic(st.a_n, v);
          row[3 * j + 1] = lil_statistic(st.a_n, s);
          row[3 * j + 2] = v > 0 ? s / v : kNaN;
        });
  });
  std::vector<GrowthRow> out;
  for (std::size_t j = 0; j < ncp; ++j)
    out.push_back({cfg.checkpoints[j], median(column(rows, 3 * ncp, 3 * j)),
        median(column(rows, 3 * ncp, 3 * j + 1)), median(column(rows, 3 * ncp, 3 * j + 2))});
  return out;
}

} // namespace selfnorm
