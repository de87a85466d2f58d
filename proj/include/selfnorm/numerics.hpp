#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

namespace selfnorm {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
  void add(double x)
  {
    const double t = sum_ + x;
    if (!std::isfinite(t)) {
      sum_ = t;
      comp_ = 0;
      return;
    }
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum &operator+=(double x)
  {
    add(x);
    return *this;
  }
  void merge(const CompensatedSum &other)
  {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct RootOptions {
  double abs_tol = 1e-12;
  double rel_tol = 4 * std::numeric_limits<double>::epsilon();
  int max_iter = 200;
};

// f(lo) and f(hi) must have opposite signs (or one of them is zero).
double bisect(const std::function<double(double)> &f, double lo, double hi,
    const RootOptions &opt = {});

// Brent's method on a sign-changing bracket.
double brent(const std::function<double(double)> &f, double lo, double hi,
    const RootOptions &opt = {});

struct Bracket {
  double lo;
  double hi;
};

// For increasing f, widen [x0, x0 + step] geometrically until f changes sign.
Bracket expand_bracket_increasing(const std::function<double(double)> &f,
    double x0, double step, int max_doublings = 200);

struct QuadratureResult {
  double value;
  double abs_error;
  int evaluations;
};

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_depth = 50;
  int max_evaluations = 2000000;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]; throws QuadratureError when the
// error target is not reached within the evaluation budget.
QuadratureResult integrate(const std::function<double(double)> &f, double a,
    double b, const QuadratureOptions &opt = {});

// Golden-section search for a minimizer of a unimodal f on [a, b].
double golden_minimize(const std::function<double(double)> &f, double a,
    double b, double tol = 1e-12, int max_iter = 200);

} // namespace selfnorm
