#include "selfnorm/bounds.hpp"

#include <algorithm>
#include <string>

#include "selfnorm/constants.hpp"
#include "selfnorm/error.hpp"

namespace selfnorm {

namespace {

void require_positive(double v, const char *what)
{
  if (!(v > 0))
    throw DomainError(std::string(what) + " must be positive");
}

void require_floor(double floor)
{
  if (!(floor >= kIteratedLogFloor * (1 - 1e-15)))
    throw DomainError("iterated-log floor must be at least e^2");
}

} // namespace

double log_mixture_integrand(const SelfNormSample &s, double y)
{
  require_positive(y, "y");
  const double q = s.b * s.b + y * y;
  return std::log(y) - 0.5 * std::log(q) + s.a * s.a / (2 * q);
}

double mixture_integrand(const SelfNormSample &s, double y)
{
  return std::exp(log_mixture_integrand(s, y));
}

double mgf_bound(double x)
{
  require_positive(x, "x");
  return std::sqrt(2.0) * std::exp(x * x);
}

double abs_moment_bound(double p)
{
  require_positive(p, "moment order p");
  return std::pow(2.0, p - 0.5) * p * gamma_function(p / 2);
}

double log_corrected_statistic(const SelfNormSample &s, double y)
{
  require_positive(y, "y");
  const double b2 = s.b * s.b;
  return std::fabs(s.a)
      / std::sqrt((b2 + y) * (1 + 0.5 * std::log1p(b2 / y)));
}

double log_corrected_tail_bound(double x)
{
  if (x >= std::sqrt(2.0))
    return std::exp(-0.5 * x * x);
  return 1.0;
}

double log_corrected_moment_bound(double p)
{
  require_positive(p, "moment order p");
  return std::pow(2.0, p / 2) + std::pow(2.0, (p - 2) / 2) * p
      * gamma_function(p / 2);
}

double lil_statistic(double a, double b, double r, double floor)
{
  require_floor(floor);
  if (!(r > 1 && r <= 2))
    throw DomainError("norm order r must lie in (1, 2]");
  const double bb = std::max(b, floor);
  return a / (bb * std::pow(std::log(std::log(bb)), (r - 1) / r));
}

double universal_statistic(double s_n, double centering, double v_n,
    double floor)
{
  require_floor(floor);
  const double vv = std::max(v_n, floor);
  return (s_n - centering) / (vv * std::sqrt(std::log(std::log(vv))));
}

double lil_limsup(double r)
{
  if (!(r > 1 && r <= 2))
    throw DomainError("norm order r must lie in (1, 2]");
  return std::pow(r / (r - 1), (r - 1) / r);
}

} // namespace selfnorm
