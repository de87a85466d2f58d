#include "selfnorm/constants.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "selfnorm/error.hpp"
#include "selfnorm/numerics.hpp"

namespace selfnorm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxExp = 709.782712893384;

void require_r(double r)
{
  if (!(r > 1 && r <= 2))
    throw DomainError("norm order r must lie in (1, 2]");
}

// x - log(1 + x), accurate for small x.
double log1p_gap(double x)
{
  if (std::fabs(x) < 1e-3) {
    // x^2/2 - x^3/3 + x^4/4 - ...
    double term = x * x, sum = 0;
    for (int k = 2; k < 12; ++k) {
      sum += (k % 2 == 0 ? 1.0 : -1.0) * term / k;
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

} // namespace

double quadratic_slack(double gamma)
{
  if (!(gamma >= 0 && gamma < 1))
    throw DomainError("gamma must lie in [0, 1)");
  if (gamma < 1e-2) {
    double sum = 0, term = 1;
    for (int j = 2; j < 40 && term > 1e-20 * sum; ++j) {
      sum += term / j;
      term *= gamma;
    }
    return sum;
  }
  return log1p_gap(-gamma) / (gamma * gamma);
}

double left_power_slack(double gamma, double r)
{
  if (!(gamma > 0 && gamma < 1))
    throw DomainError("gamma must lie in (0, 1)");
  require_r(r);
  return quadratic_slack(gamma) * std::pow(gamma, 2 - r);
}

double right_power_slack_bound(double r)
{
  require_r(r);
  return std::pow(r - 1, r - 1) * std::pow(2 - r, 2 - r) / r;
}

double right_power_slack(double r)
{
  require_r(r);
  // c is feasible iff c >= (x - log(1 + x)) / x^r at every x > 0; this has
  // the sign of log(1 + x) - x + c x^r but stays resolvable near x = 0.
  auto excess = [r](double x) { return log1p_gap(x) / std::pow(x, r); };
  const double limit_at_zero = r == 2 ? 0.5 : 0.0;

  constexpr int kPoints = 10000;
  std::vector<double> grid(kPoints);
  const double lo = std::log(1e-8), hi = std::log(1e8);
  for (int i = 0; i < kPoints; ++i)
    grid[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));

  auto feasible = [&](double c) {
    double worst = c - limit_at_zero;
    int worst_i = -1;
    for (int i = 0; i < kPoints; ++i) {
      const double m = c - excess(grid[i]);
      if (m < worst) {
        worst = m;
        worst_i = i;
      }
    }
    if (worst_i >= 0) {
      const double a = grid[std::max(worst_i - 1, 0)];
      const double b = grid[std::min(worst_i + 1, kPoints - 1)];
      const double x = golden_minimize(
          [&](double t) { return c - excess(std::exp(t)); }, std::log(a),
          std::log(b), 1e-12);
      worst = std::min(worst, c - excess(std::exp(x)));
    }
    return worst >= 0;
  };

  double c_lo = 1e-6, c_hi = right_power_slack_bound(r);
  if (feasible(c_lo) || !feasible(c_hi)) {
    std::ostringstream os;
    os << "cannot bracket the power slack constant for r = " << r;
    throw ConvergenceError(os.str());
  }
  for (int i = 0; i < 200 && c_hi - c_lo > 1e-10; ++i) {
    const double mid = 0.5 * (c_lo + c_hi);
    if (feasible(mid))
      c_hi = mid;
    else
      c_lo = mid;
  }
  return c_hi;
}

double power_slack(double gamma, double r)
{
  return std::max(right_power_slack(r), left_power_slack(gamma, r));
}

double lil_root(double lambda)
{
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw DomainError("lambda must be positive and finite");
  const double target = lambda * lambda;
  auto f = [target](double h) { return log1p_gap(h) - target; };
  double hi = std::max(1.0, 2 * lambda);
  for (int i = 0; f(hi) < 0; ++i) {
    if (i > 200)
      throw ConvergenceError("cannot bracket the iterated-log root");
    hi *= 2;
  }
  RootOptions opt;
  opt.abs_tol = std::numeric_limits<double>::min();
  return brent(f, 0.0, hi, opt);
}

LilConstants lil_constants(double lambda)
{
  LilConstants k{};
  k.lambda = lambda;
  k.root = lil_root(lambda);
  k.limsup = k.root / lambda;
  k.slack_gamma = k.root / (1 + k.root);
  k.upper_scale = lambda / (k.slack_gamma * quadratic_slack(k.slack_gamma));
  return k;
}

namespace {

struct IteratedLogs {
  double l1, l2, l3;
};

// Iterated logs of e^u + alpha without forming e^u.
IteratedLogs iterated_logs_at_log(double u, double alpha)
{
  const double la = std::log(alpha);
  const double l1 = u > la ? u + std::log1p(std::exp(la - u))
                           : la + std::log1p(std::exp(u - la));
  const double l2 = std::log(l1);
  return {l1, l2, std::log(l2)};
}

void require_weight(double alpha, double delta)
{
  if (!(alpha > 0) || !(delta > 0))
    throw DomainError("weight parameters alpha, delta must be positive");
  // logloglog(1 + alpha) > 0 is needed on the whole integration range.
  if (!(std::log(std::log(std::log1p(alpha))) > 0))
    throw DomainError("alpha too small: logloglog(1 + alpha) <= 0");
}

double unnormalized_integral(double alpha, double delta)
{
  require_weight(alpha, delta);
  // With s = logloglog(x + alpha), dx / (x l1 l2 l3^(1+d)) splits into
  // s' s^-(1+d) dx, which integrates exactly, plus an alpha/x correction
  // that decays like e^-u after u = log alpha.
  const IteratedLogs at_one = iterated_logs_at_log(0.0, alpha);
  const double exact = std::pow(at_one.l3, -delta) / delta;
  auto correction = [alpha, delta](double u) {
    const IteratedLogs l = iterated_logs_at_log(u, alpha);
    const double weight = 1.0 / (1.0 + std::exp(u - std::log(alpha)));
    return weight / (l.l1 * l.l2 * std::pow(l.l3, 1 + delta));
  };
  const double upper = std::log(alpha) + 50;
  QuadratureOptions opt;
  opt.rel_tol = 1e-13;
  const double split = std::log(alpha);
  double corr = integrate(correction, 0.0, split, opt).value;
  corr += integrate(correction, split, upper, opt).value;
  return exact + corr;
}

} // namespace

double iterated_log_weight(double y, const IteratedLogWeight &w)
{
  if (!(y > 0))
    throw DomainError("weight argument must be positive");
  const double l1 = std::log(y + w.alpha);
  const double l2 = std::log(l1);
  const double l3 = std::log(l2);
  if (!(l3 > 0))
    throw DomainError("alpha too small: logloglog(y + alpha) <= 0");
  return w.beta * l1 * l2 * std::pow(l3, 1 + w.delta);
}

double iterated_log_integral(const IteratedLogWeight &w)
{
  return unnormalized_integral(w.alpha, w.delta) / w.beta;
}

double iterated_log_normalizer(double alpha, double delta)
{
  const double beta = 2 * unnormalized_integral(alpha, delta);
  if (!(beta > 0) || !std::isfinite(beta))
    throw DomainError("weight normalization failed");
  return beta;
}

GrowthCheck check_growth(const IteratedLogWeight &w, double y_max)
{
  GrowthCheck g{0, 0};
  constexpr int kY = 400, kC = 61;
  const double ly0 = std::log(1e-6), ly1 = std::log(y_max);
  for (int i = 0; i < kY; ++i) {
    const double y = std::exp(ly0 + (ly1 - ly0) * i / (kY - 1));
    const double ly = iterated_log_weight(y, w);
    for (int j = 0; j < kC; ++j) {
      const double c = std::pow(10.0, 6.0 * j / (kC - 1));
      g.max_scale_ratio =
          std::max(g.max_scale_ratio, iterated_log_weight(c * y, w) / (c * ly));
    }
    if (y >= 1)
      g.max_square_ratio =
          std::max(g.max_square_ratio, iterated_log_weight(y * y, w) / ly);
  }
  // y = 1 itself belongs to the squaring condition's range.
  g.max_square_ratio = std::max(g.max_square_ratio, 1.0);
  return g;
}

IteratedLogWeight make_iterated_log_weight(double alpha, double delta)
{
  IteratedLogWeight w{alpha, delta, iterated_log_normalizer(alpha, delta)};
  const GrowthCheck g = check_growth(w);
  if (!g.ok()) {
    std::ostringstream os;
    os << "alpha = " << alpha << " too small for the growth conditions: "
       << "max L(cy)/(cL(y)) = " << g.max_scale_ratio
       << ", max L(y^2)/L(y) = " << g.max_square_ratio << " (limit 3)";
    throw DomainError(os.str());
  }
  return w;
}

double gaussian_tilt(double x)
{
  if (std::isnan(x))
    throw DomainError("gaussian_tilt of NaN");
  if (x < 1)
    return 0.0;
  const double e = 0.5 * x * x;
  if (e - std::log(x) > kMaxExp)
    return std::numeric_limits<double>::infinity();
  if (e > kMaxExp)
    return std::exp(e - std::log(x));
  return std::exp(e) / x;
}

PowerTilt power_tilt(double w, double r)
{
  if (!(w > 0))
    throw DomainError("power_tilt needs w > 0");
  require_r(r);
  const double peak = std::pow(w, 1 / (r - 1));
  const double e = (1 - 1 / r) * std::pow(w, r / (r - 1));
  const double log_value = e - std::log(peak);
  double value;
  if (log_value > kMaxExp)
    value = std::numeric_limits<double>::infinity();
  else if (e > kMaxExp)
    value = std::exp(log_value);
  else
    value = std::exp(e) / peak;
  return {peak, value};
}

double gamma_function(double p)
{
  if (!(p > 0 && p <= 50))
    throw DomainError("gamma_function defined here for 0 < p <= 50");
  // Shift up to z >= 15 with Gamma(z + 1) = z Gamma(z), then the Stirling
  // series for log Gamma(z); the first omitted term is below 1e-20.
  double z = p, shift = 1;
  while (z < 15) {
    shift *= z;
    z += 1;
  }
  static constexpr std::array<double, 8> b = {1.0 / 12, -1.0 / 360,
      1.0 / 1260, -1.0 / 1680, 1.0 / 1188, -691.0 / 360360, 1.0 / 156,
      -3617.0 / 122400};
  const double inv = 1 / z, inv2 = inv * inv;
  double series = 0, pw = inv;
  for (double coef : b) {
    series += coef * pw;
    pw *= inv2;
  }
  const double log_gamma =
      (z - 0.5) * std::log(z) - z + 0.5 * std::log(2 * kPi) + series;
  return std::exp(log_gamma) / shift;
}

} // namespace selfnorm
