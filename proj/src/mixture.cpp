#include "selfnorm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "selfnorm/numerics.hpp"

namespace selfnorm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRsUpper = 0.1353352832366127; // e^-2

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_r(double r)
{
  if (!(r > 1 && r <= 2))
    throw DomainError("norm order r must lie in (1, 2]");
}

double exponent(double lambda, double u, double v, double r)
{
  return lambda * u - std::pow(lambda, r) * v / r;
}

// Largest value of lambda u - lambda^r v / r over lambda in [lo, hi].
double max_exponent(double u, double v, double r, double lo, double hi)
{
  double best = std::max(exponent(lo, u, v, r), exponent(hi, u, v, r));
  if (u > 0) {
    const double peak = std::pow(u / v, 1 / (r - 1));
    if (peak > lo && peak < hi)
      best = std::max(best, exponent(peak, u, v, r));
  }
  return best;
}

double log_point_masses(const PointMasses &pm, double u, double v, double r)
{
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(pm.atoms.size());
  for (const auto &a : pm.atoms) {
    terms.push_back(std::log(a.weight) + exponent(a.lambda, u, v, r));
    m = std::max(m, terms.back());
  }
  CompensatedSum s;
  for (double t : terms)
    s += std::exp(t - m);
  return m + std::log(s.value());
}

QuadratureOptions mixture_quadrature()
{
  QuadratureOptions opt;
  opt.rel_tol = 1e-12;
  opt.max_depth = 60;
  return opt;
}

// Integrate on [a, b] split at an interior peak when there is one.
double integrate_split(const std::function<double(double)> &f, double a,
    double b, double peak)
{
  const auto opt = mixture_quadrature();
  if (peak > a && peak < b)
    return integrate(f, a, peak, opt).value + integrate(f, peak, b, opt).value;
  return integrate(f, a, b, opt).value;
}

double log_iterated_density(const IteratedLogDensity &d, double u, double v,
    double r)
{
  // lambda = exp(-e^w) maps (0, e^-2) onto w in (log 2, inf) and turns
  // f(lambda) dlambda into w^-(1 + delta) dw.
  const double m = std::max(0.0, max_exponent(u, v, r, 0.0, kRsUpper));
  auto integrand = [&](double w) {
    const double lambda = std::exp(-std::exp(w));
    return std::exp(exponent(lambda, u, v, r) - m)
        * std::pow(w, -1 - d.delta);
  };
  // Past w_cut the exponent is below 1e-17 in magnitude and the remaining
  // integral is exp(-m) w_cut^-delta / delta to double precision.
  const double lambda_cut = 1e-17 / (1 + std::fabs(u) + v);
  const double w0 = std::log(std::log(1 / kRsUpper));
  const double w_cut = std::max(w0, std::log(std::log(1 / lambda_cut)));
  double peak = -1;
  if (u > 0) {
    const double lp = std::pow(u / v, 1 / (r - 1));
    if (lp < kRsUpper && lp > lambda_cut)
      peak = std::log(std::log(1 / lp));
  }
  const double body = integrate_split(integrand, w0, w_cut, peak);
  const double tail = std::exp(-m) * std::pow(w_cut, -d.delta) / d.delta;
  return m + std::log(body + tail);
}

double log_density_in_log_lambda(const std::function<double(double)> &density,
    double lo, double hi, double u, double v, double r)
{
  const double m = max_exponent(u, v, r, lo, hi);
  auto integrand = [&](double t) {
    const double lambda = std::exp(t);
    return std::exp(exponent(lambda, u, v, r) - m) * density(lambda) * lambda;
  };
  const double t_lo = std::log(std::max(lo, 1e-300));
  const double t_hi = std::log(hi);
  double peak = -std::numeric_limits<double>::infinity();
  if (u > 0)
    peak = std::log(std::pow(u / v, 1 / (r - 1)));
  const double body = integrate_split(integrand, t_lo, t_hi, peak);
  if (!(body > 0))
    throw QuadratureError("mixture integral underflowed");
  return m + std::log(body);
}

} // namespace

MixtureMeasure::MixtureMeasure(Kind kind) : kind_(std::move(kind))
{
  std::visit(Overloaded{
                 [this](const PointMasses &pm) {
                   if (pm.atoms.empty())
                     throw DomainError("point-mass mixture needs an atom");
                   lower_ = std::numeric_limits<double>::infinity();
                   for (const auto &a : pm.atoms) {
                     if (!(a.lambda > 0) || !(a.weight > 0))
                       throw DomainError(
                           "atoms need positive location and weight");
                     total_mass_ += a.weight;
                     upper_ = std::max(upper_, a.lambda);
                     lower_ = std::min(lower_, a.lambda);
                   }
                 },
                 [this](const IteratedLogDensity &d) {
                   if (!(d.delta > 0))
                     throw DomainError("density exponent delta must be positive");
                   total_mass_ = std::pow(std::log(2.0), -d.delta) / d.delta;
                   upper_ = kRsUpper;
                   lower_ = 0;
                 },
                 [this](const UniformDensity &d) {
                   if (!(d.lo >= 0 && d.hi > d.lo && d.height > 0))
                     throw DomainError("uniform density needs 0 <= lo < hi, height > 0");
                   total_mass_ = d.height * (d.hi - d.lo);
                   upper_ = d.hi;
                   lower_ = d.lo;
                 },
                 [this](const GeneralDensity &d) {
                   if (!d.density || !(d.lo >= 0 && d.hi > d.lo && d.mass > 0))
                     throw DomainError("general density needs a callable, 0 <= lo < hi, mass > 0");
                   total_mass_ = d.mass;
                   upper_ = d.hi;
                   lower_ = d.lo;
                 },
             },
      kind_);
}

double log_mixture_value(double u, double v, const MixtureMeasure &f, double r)
{
  require_r(r);
  if (!(v > 0))
    throw DomainError("mixture argument v must be positive");
  if (!std::isfinite(u))
    throw DomainError("mixture argument u must be finite");
  return std::visit(
      Overloaded{
          [&](const PointMasses &pm) { return log_point_masses(pm, u, v, r); },
          [&](const IteratedLogDensity &d) {
            return log_iterated_density(d, u, v, r);
          },
          [&](const UniformDensity &d) {
            const double h = d.height;
            return log_density_in_log_lambda(
                [h](double) { return h; }, d.lo, d.hi, u, v, r);
          },
          [&](const GeneralDensity &d) {
            return log_density_in_log_lambda(d.density, d.lo, d.hi, u, v, r);
          },
      },
      f.kind());
}

double mixture_boundary(double v, double c, const MixtureMeasure &f, double r)
{
  if (!(c > 0))
    throw DomainError("boundary level c must be positive");
  if (!(v > 0))
    throw DomainError("boundary argument v must be positive");
  const double log_c = std::log(c);
  auto g = [&](double u) { return log_mixture_value(u, v, f, r) - log_c; };
  Bracket br;
  try {
    br = expand_bracket_increasing(g, 0.0, 1.0 + std::sqrt(v), 1000);
  } catch (const ConvergenceError &e) {
    std::ostringstream os;
    os << "boundary bracket failed at v = " << v << ", c = " << c
       << ", total mass = " << f.total_mass() << ": " << e.what();
    throw ConvergenceError(os.str());
  }
  if (br.lo == br.hi)
    return br.lo;
  RootOptions opt;
  opt.abs_tol = 1e-300;
  opt.rel_tol = 1e-15;
  const double u = brent(g, br.lo, br.hi, opt);
  // for large v the terms of log psi dwarf 1e-9; a sign change within a
  // relative 1e-12 of u still pins the root to working precision
  const bool tight = std::fabs(g(u)) <= 1e-9;
  if (!tight && !(g(u * (1 - 1e-12)) <= 0 && g(u * (1 + 1e-12)) >= 0)) {
    std::ostringstream os;
    os << "boundary residual too large at v = " << v << ": " << g(u);
    throw ConvergenceError(os.str());
  }
  return u;
}

double iterated_log_boundary_asymptotic(double v, double c, double delta)
{
  if (!(c > 0) || !(delta > 0))
    throw DomainError("asymptotic boundary needs c > 0, delta > 0");
  if (!(v > std::exp(std::exp(1.0))))
    throw DomainError("asymptotic boundary needs log3 v > 0");
  const double l2 = std::log(std::log(v));
  const double l3 = std::log(l2);
  const double inner = l2 + (1.5 + delta) * l3 + std::log(c / (2 * std::sqrt(kPi)));
  if (!(inner > 0))
    throw DomainError("asymptotic boundary bracket is not positive at this v");
  return std::sqrt(2 * v * inner);
}

double power_boundary_asymptotic(double v, double r)
{
  require_r(r);
  if (!(v > std::exp(std::exp(1.0))))
    throw DomainError("power asymptotic needs v > e^e");
  return std::pow(v, 1 / r)
      * std::pow(r * std::log(std::log(v)) / (r - 1), (r - 1) / r);
}

double crossing_probability_bound(double c, const MixtureMeasure &f)
{
  if (!(c > 0))
    throw DomainError("crossing level c must be positive");
  return std::min(1.0, f.total_mass() / c);
}

GaussianMixture::GaussianMixture(const Eigen::MatrixXd &precision)
    : precision_(precision)
{
  if (precision.rows() == 0 || precision.rows() != precision.cols())
    throw DomainError("precision matrix must be square and non-empty");
  if (!precision.isApprox(precision.transpose(), 1e-12))
    throw DomainError("precision matrix must be symmetric");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(precision_);
  log_det_ = detail::checked_log_det(ldlt, precision_.norm());
}

GaussianMixtureWorkspace::GaussianMixtureWorkspace(const GaussianMixture &g)
    : g_(g), m_(g.dim(), g.dim()), ldlt_(g.dim()), tmp_(g.dim())
{
}

void GaussianMixtureWorkspace::factor(const Eigen::Ref<const Eigen::MatrixXd> &q)
{
  if (q.rows() != g_.dim() || q.cols() != g_.dim())
    throw DomainError("dimension mismatch in gaussian mixture statistic");
  m_.noalias() = g_.precision() + q;
  ldlt_.compute(m_);
  log_det_ = detail::checked_log_det(ldlt_, m_.norm());
}

double GaussianMixtureWorkspace::log_value(const Eigen::Ref<const Eigen::VectorXd> &s,
    const Eigen::Ref<const Eigen::MatrixXd> &q)
{
  if (s.size() != g_.dim())
    throw DomainError("dimension mismatch in gaussian mixture statistic");
  factor(q);
  tmp_ = ldlt_.solve(s);
  return 0.5 * g_.log_det_precision() - 0.5 * log_det_ + 0.5 * s.dot(tmp_);
}

bool GaussianMixtureWorkspace::crosses(const Eigen::Ref<const Eigen::VectorXd> &s,
    const Eigen::Ref<const Eigen::MatrixXd> &q, double c)
{
  if (!(c > 1))
    throw DomainError("crossing level c must exceed 1");
  if (s.size() != g_.dim())
    throw DomainError("dimension mismatch in gaussian mixture statistic");
  factor(q);
  tmp_ = ldlt_.solve(s);
  return s.dot(tmp_) >= log_det_ + 2 * std::log(c) - g_.log_det_precision();
}

} // namespace selfnorm
