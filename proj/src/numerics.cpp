#include "selfnorm/numerics.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <sstream>
#include <vector>

#include "selfnorm/error.hpp"

namespace selfnorm {

namespace {

bool converged(double lo, double hi, const RootOptions &opt)
{
  const double mid = 0.5 * (lo + hi);
  return std::fabs(hi - lo) <= 2 * (opt.abs_tol + opt.rel_tol * std::fabs(mid));
}

void check_bracket(double flo, double fhi, double lo, double hi)
{
  if (std::isnan(flo) || std::isnan(fhi))
    throw ConvergenceError("root bracket evaluates to NaN");
  if ((flo > 0 && fhi > 0) || (flo < 0 && fhi < 0)) {
    std::ostringstream os;
    os << "no sign change on [" << lo << ", " << hi << "]: f = " << flo
       << ", " << fhi;
    throw ConvergenceError(os.str());
  }
}

} // namespace

double bisect(const std::function<double(double)> &f, double lo, double hi,
    const RootOptions &opt)
{
  double flo = f(lo);
  const double fhi = f(hi);
  check_bracket(flo, fhi, lo, hi);
  if (flo == 0)
    return lo;
  if (fhi == 0)
    return hi;
  for (int i = 0; i < opt.max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (converged(lo, hi, opt) || mid == lo || mid == hi)
      return mid;
    const double fm = f(mid);
    if (fm == 0)
      return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  if (converged(lo, hi, opt))
    return 0.5 * (lo + hi);
  throw ConvergenceError("bisection did not converge");
}

double brent(const std::function<double(double)> &f, double lo, double hi,
    const RootOptions &opt)
{
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  check_bracket(fa, fb, lo, hi);
  if (fa == 0)
    return a;
  if (fb == 0)
    return b;
  double c = a, fc = fa, d = b - a, e = d;
  for (int i = 0; i < opt.max_iter; ++i) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = opt.abs_tol + opt.rel_tol * std::fabs(b);
    const double m = 0.5 * (c - b);
    if (std::fabs(m) <= tol || fb == 0)
      return b;
    if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2 * m * s;
        q = 1 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2 * m * q * (q - r) - (b - a) * (r - 1));
        q = (q - 1) * (r - 1) * (s - 1);
      }
      if (p > 0)
        q = -q;
      else
        p = -p;
      if (2 * p < std::min(3 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = f(b);
    if (std::isnan(fb))
      throw ConvergenceError("root iterate evaluates to NaN");
  }
  throw ConvergenceError("Brent iteration did not converge");
}

Bracket expand_bracket_increasing(const std::function<double(double)> &f,
    double x0, double step, int max_doublings)
{
  const double f0 = f(x0);
  if (std::isnan(f0))
    throw ConvergenceError("bracket start evaluates to NaN");
  if (f0 == 0)
    return {x0, x0};
  const double dir = f0 < 0 ? 1.0 : -1.0;
  double inner = x0;
  for (int i = 0; i < max_doublings; ++i) {
    const double outer = x0 + dir * step;
    const double fo = f(outer);
    if (std::isnan(fo))
      throw ConvergenceError("bracket expansion hit NaN");
    if ((fo >= 0) != (f0 >= 0) || fo == 0)
      return dir > 0 ? Bracket{inner, outer} : Bracket{outer, inner};
    inner = outer;
    step *= 2;
  }
  std::ostringstream os;
  os << "could not bracket a root starting from " << x0 << " (f = " << f0
     << ")";
  throw ConvergenceError(os.str());
}

namespace {

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329,
    0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013,
    0.405845151377397166906606412076961, 0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970,
    0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550,
    0.190350578064785409913256402421014, 0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082,
    0.279705391489276667901467771423780, 0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment &o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)> &f, double a, double b)
{
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1)
      gauss += kWg[j / 2] * (f1 + f2);
  }
  kronrod *= h;
  gauss *= h;
  if (!std::isfinite(kronrod))
    throw QuadratureError("non-finite integrand value");
  return {a, b, kronrod, std::fabs(kronrod - gauss)};
}

} // namespace

QuadratureResult integrate(const std::function<double(double)> &f, double a,
    double b, const QuadratureOptions &opt)
{
  if (a == b)
    return {0.0, 0.0, 0};
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  int evals = 15;
  double total = first.value, err = first.error;
  heap.push(first);
  const double min_width = std::fabs(b - a) * std::ldexp(1.0, -opt.max_depth);
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::fabs(total))) {
    if (evals + 30 > opt.max_evaluations) {
      std::ostringstream os;
      os << "quadrature budget exhausted: estimate " << total << ", error "
         << err;
      throw QuadratureError(os.str());
    }
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (std::fabs(worst.b - worst.a) < min_width) {
      std::ostringstream os;
      os << "quadrature subdivision limit near x = " << mid;
      throw QuadratureError(os.str());
    }
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    evals += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    // Periodically resum to keep drift from the running updates out of the
    // stopping rule.
    if (evals % 3000 < 30) {
      std::vector<Segment> all;
      all.reserve(heap.size());
      CompensatedSum tv, te;
      while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
      }
      for (const auto &s : all) {
        tv += s.value;
        te += s.error;
        heap.push(s);
      }
      total = tv.value();
      err = te.value();
    }
  }
  CompensatedSum tv, te;
  while (!heap.empty()) {
    tv += heap.top().value;
    te += heap.top().error;
    heap.pop();
  }
  return {tv.value(), te.value(), evals};
}

double golden_minimize(const std::function<double(double)> &f, double a,
    double b, double tol, int max_iter)
{
  const double invphi = (std::sqrt(5.0) - 1) / 2;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && std::fabs(b - a) > tol * (1 + std::fabs(c));
       ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

} // namespace selfnorm
