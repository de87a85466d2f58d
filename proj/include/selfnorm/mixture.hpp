#pragma once

#include <functional>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "selfnorm/error.hpp"

namespace selfnorm {

struct PointMass {
  double lambda;
  double weight;
};

struct PointMasses {
  std::vector<PointMass> atoms;
};

// f(lambda) = 1 / (lambda log(1/lambda) loglog(1/lambda)^(1 + delta)) on
// (0, e^-2); total mass log(2)^-delta / delta.
struct IteratedLogDensity {
  double delta = 1.0;
};

// Constant density `height` on (lo, hi).
struct UniformDensity {
  double lo = 0.0;
  double hi = 1.0;
  double height = 1.0;
};

// Arbitrary density on (lo, hi) with known total mass. The integral is taken
// in t = log lambda, so lambda f(lambda) must be negligible below 1e-300.
struct GeneralDensity {
  std::function<double(double)> density;
  double lo = 0.0;
  double hi = 1.0;
  double mass = 1.0;
};

class MixtureMeasure {
public:
  using Kind =
      std::variant<PointMasses, IteratedLogDensity, UniformDensity, GeneralDensity>;

  explicit MixtureMeasure(Kind kind);

  const Kind &kind() const { return kind_; }
  double total_mass() const { return total_mass_; }
  // Upper end of the support (largest atom for point masses).
  double support_upper() const { return upper_; }
  // sup{y > 0 : F(0, y) = 0}.
  double support_lower() const { return lower_; }

private:
  Kind kind_;
  double total_mass_ = 0;
  double upper_ = 0;
  double lower_ = 0;
};

// log of int exp(lambda u - lambda^r v / r) dF(lambda).
double log_mixture_value(double u, double v, const MixtureMeasure &f,
    double r = 2);

inline double mixture_value(double u, double v, const MixtureMeasure &f,
    double r = 2)
{
  return std::exp(log_mixture_value(u, v, f, r));
}

// The unique u with mixture_value(u, v) = c.
double mixture_boundary(double v, double c, const MixtureMeasure &f,
    double r = 2);

// sqrt(2v [log2 v + (3/2 + delta) log3 v + log(c / (2 sqrt(pi)))]), the
// large-v form of the boundary for IteratedLogDensity at r = 2.
double iterated_log_boundary_asymptotic(double v, double c, double delta);

// v^(1/r) (r loglog v / (r - 1))^((r - 1)/r), leading order at general r.
double power_boundary_asymptotic(double v, double r);

// min(1, F(0, lambda0) / c).
double crossing_probability_bound(double c, const MixtureMeasure &f);

// Gaussian mixing measure with mean zero and covariance V^-1.
class GaussianMixture {
public:
  explicit GaussianMixture(const Eigen::MatrixXd &precision);

  int dim() const { return static_cast<int>(precision_.rows()); }
  const Eigen::MatrixXd &precision() const { return precision_; }
  double log_det_precision() const { return log_det_; }

private:
  Eigen::MatrixXd precision_;
  double log_det_;
};

namespace detail {

template <typename Derived>
double checked_log_det(const Eigen::LDLT<Derived> &ldlt, double norm)
{
  if (ldlt.info() != Eigen::Success)
    throw DomainError("LDLT factorization failed");
  const auto d = ldlt.vectorD();
  const double tol = 1e-12 * (norm > 0 ? norm : 1.0);
  double log_det = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > tol))
      throw DomainError("matrix is not positive definite");
    log_det += std::log(d(i));
  }
  return log_det;
}

} // namespace detail

// log of |V|^(1/2) |V + Q|^(-1/2) exp(s' (V + Q)^-1 s / 2).
template <typename DerivedS, typename DerivedQ>
double gaussian_mixture_log_value(const Eigen::MatrixBase<DerivedS> &s,
    const Eigen::MatrixBase<DerivedQ> &q, const GaussianMixture &g)
{
  if (s.size() != g.dim() || q.rows() != g.dim() || q.cols() != g.dim())
    throw DomainError("dimension mismatch in gaussian mixture statistic");
  const Eigen::MatrixXd m = g.precision() + q;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const double log_det = detail::checked_log_det(ldlt, m.norm());
  const Eigen::VectorXd sv = s;
  return 0.5 * g.log_det_precision() - 0.5 * log_det
      + 0.5 * sv.dot(ldlt.solve(sv));
}

// s' (V + Q)^-1 s >= log|V + Q| + 2 log c - log|V|.
template <typename DerivedS, typename DerivedQ>
bool gaussian_mixture_crosses(const Eigen::MatrixBase<DerivedS> &s,
    const Eigen::MatrixBase<DerivedQ> &q, const GaussianMixture &g, double c)
{
  if (!(c > 1))
    throw DomainError("crossing level c must exceed 1");
  const Eigen::MatrixXd m = g.precision() + q;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const double log_det = detail::checked_log_det(ldlt, m.norm());
  const Eigen::VectorXd sv = s;
  return sv.dot(ldlt.solve(sv))
      >= log_det + 2 * std::log(c) - g.log_det_precision();
}

// Preallocated factorization for repeated evaluation along a path.
class GaussianMixtureWorkspace {
public:
  explicit GaussianMixtureWorkspace(const GaussianMixture &g);

  double log_value(const Eigen::Ref<const Eigen::VectorXd> &s,
      const Eigen::Ref<const Eigen::MatrixXd> &q);
  bool crosses(const Eigen::Ref<const Eigen::VectorXd> &s,
      const Eigen::Ref<const Eigen::MatrixXd> &q, double c);

private:
  void factor(const Eigen::Ref<const Eigen::MatrixXd> &q);

  const GaussianMixture &g_;
  Eigen::MatrixXd m_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  Eigen::VectorXd tmp_;
  double log_det_ = 0;
};

} // namespace selfnorm
