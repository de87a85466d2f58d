#include "selfnorm/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "selfnorm/bounds.hpp"
#include "selfnorm/error.hpp"

namespace selfnorm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::uint64_t kUnbounded = std::numeric_limits<std::uint64_t>::max();
// (98!)^2 is the last squared factorial weight below the double range.
constexpr std::uint64_t kFactorialSteps = 98;

void validate_grid(const TimeGrid &g)
{
  switch (g.kind) {
  case TimeGrid::Kind::Uniform:
    if (!(g.dt > 0))
      throw ConfigError("uniform time grid needs dt > 0");
    break;
  case TimeGrid::Kind::Geometric:
    if (!(g.t0 > 0) || !(g.ratio > 1))
      throw ConfigError("geometric time grid needs t0 > 0 and ratio > 1");
    break;
  case TimeGrid::Kind::Explicit:
    if (g.times.empty() || !(g.times[0] > 0))
      throw ConfigError("explicit time grid needs positive times");
    for (std::size_t i = 1; i < g.times.size(); ++i)
      if (!(g.times[i] > g.times[i - 1]))
        throw ConfigError("explicit time grid must be strictly increasing");
    break;
  }
}

// Support extremes and mean of the bounded laws accepted by the
// one-sided generators.
struct Range {
  double lo, hi;
};

Range law_range(const Law &law)
{
  return std::visit(
      Overloaded{
          [](const TwoPointLaw &l) { return Range{l.low, l.high}; },
          [](const UniformLaw &l) { return Range{l.lo, l.hi}; },
          [](const CenteredExponentialLaw &l) {
            return Range{-l.scale, std::numeric_limits<double>::infinity()};
          },
          [](const DiscreteLaw &l) {
            Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
            for (int i = 0; i < 3; ++i)
              if (l.probs[i] > 0) {
                r.lo = std::min(r.lo, l.values[i]);
                r.hi = std::max(r.hi, l.values[i]);
              }
            return r;
          },
          [](const RademacherLaw &) { return Range{-1, 1}; },
          [](const auto &) -> Range {
            return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
          },
      },
      law);
}

void require_nonpositive_mean(const Law &law, const char *who)
{
  if (mean(law) > 1e-12)
    throw ConfigError(std::string(who) + " needs an increment law with mean <= 0");
}

void require_r(double r)
{
  if (!(r > 1 && r <= 2))
    throw ConfigError("norm order r must lie in (1, 2]");
}

} // namespace

double TimeGrid::time(std::uint64_t k) const
{
  if (k == 0)
    return 0.0;
  switch (kind) {
  case Kind::Uniform:
    return static_cast<double>(k) * dt;
  case Kind::Geometric:
    return t0 * std::pow(ratio, static_cast<double>(k - 1));
  case Kind::Explicit:
    if (k > times.size())
      throw DomainError("time grid exhausted");
    return times[k - 1];
  }
  return 0.0;
}

std::uint64_t TimeGrid::steps_to(double t) const
{
  if (!(t > 0))
    return 0;
  std::uint64_t k = 1;
  switch (kind) {
  case Kind::Uniform:
    k = static_cast<std::uint64_t>(std::ceil(t / dt));
    break;
  case Kind::Geometric:
    k = t <= t0 ? 1 : 1 + static_cast<std::uint64_t>(std::ceil(std::log(t / t0) / std::log(ratio)));
    break;
  case Kind::Explicit: {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end())
      throw DomainError("time grid ends before the requested time");
    return static_cast<std::uint64_t>(it - times.begin()) + 1;
  }
  }
  k = std::max<std::uint64_t>(k, 1);
  while (time(k) < t)
    ++k;
  while (k > 1 && time(k - 1) >= t)
    --k;
  return k;
}

std::string process_name(const ProcessSpec &s)
{
  return std::visit(Overloaded{
                        [](const spec::Rademacher &) { return "rademacher"; },
                        [](const spec::ScaledSymmetric &) { return "scaled_symmetric"; },
                        [](const spec::BoundedAbove &) { return "bounded_above"; },
                        [](const spec::Bernstein &) { return "bernstein"; },
                        [](const spec::BoundedBelow &) { return "bounded_below"; },
                        [](const spec::BrownianGrid &) { return "brownian_grid"; },
                        [](const spec::MvBrownianGrid &) { return "mv_brownian_grid"; },
                        [](const spec::TruncatedCentering &) { return "truncated_centering"; },
                        [](const spec::WeightedIID &) { return "weighted_iid"; },
                        [](const spec::ThreePointJump &) { return "three_point_jump"; },
                        [](const spec::ThreePointTruncated &) { return "three_point_truncated"; },
                    },
      s);
}

bool Certification::covers(double lambda) const
{
  switch (kind) {
  case Kind::AllReal:
    return std::isfinite(lambda);
  case Kind::Restricted:
    return lambda >= 0 && lambda <= lambda_max * (1 + 1e-12);
  case Kind::None:
    return false;
  }
  return false;
}

DiscreteLaw three_point_law(std::uint64_t n)
{
  DiscreteLaw law;
  if (n < 10) {
    law.probs = {1, 0, 0};
    return law;
  }
  const double nn = static_cast<double>(n);
  const double ln = std::log(nn);
  const double s = 1 / std::sqrt(nn);
  const double p_jump = 1 / (nn * ln * ln);
  const double p_up = 0.5 + s * std::sqrt(ln);
  const double p_down = 0.5 - s * std::sqrt(ln) - p_jump;
  const double m = s * (p_up - p_down) / p_jump;
  law.values = {-s, -m, s};
  law.probs = {p_down, p_jump, p_up};
  return law;
}

double weight_at(std::uint64_t i, spec::WeightRule rule)
{
  if (rule == spec::WeightRule::Unit)
    return 1.0;
  if (i > kFactorialSteps)
    throw DomainError("factorial weights overflow past step 98");
  double w = 1;
  for (std::uint64_t k = 2; k <= i; ++k)
    w *= static_cast<double>(k);
  return w;
}

PreparedSpec::PreparedSpec(ProcessSpec spec) : spec_(std::move(spec)), max_steps_(kUnbounded)
{
  using K = Certification::Kind;
  std::visit(
      Overloaded{
          [&](const spec::Rademacher &) {
            cert_ = {K::AllReal, 0, 2, "conditionally symmetric increments"};
          },
          [&](const spec::ScaledSymmetric &s) {
            validate(SignedScaleLaw{s.scale});
            cert_ = {K::AllReal, 0, 2, "conditionally symmetric increments"};
          },
          [&](const spec::BoundedAbove &s) {
            if (!(s.m > 0) || !(s.lambda0 > 0 && s.lambda0 <= 1 / s.m * (1 + 1e-15)))
              throw ConfigError("bounded_above needs m > 0 and 0 < lambda0 <= 1/m");
            validate(s.law);
            if (law_range(s.law).hi > s.m)
              throw ConfigError("bounded_above increments must not exceed m");
            require_nonpositive_mean(s.law, "bounded_above");
            cert_ = {K::Restricted, s.lambda0, 2, "increments bounded above, conditional variance compensator"};
          },
          [&](const spec::Bernstein &s) {
            if (!(s.m > 0) || !(s.rho > 0 && s.rho < 1))
              throw ConfigError("bernstein needs m > 0 and 0 < rho < 1");
            cert_ = {K::Restricted, (1 - s.rho) / s.m, 2, "Bernstein moment condition"};
          },
          [&](const spec::BoundedBelow &s) {
            if (!(s.m > 0))
              throw ConfigError("bounded_below needs m > 0");
            if (!(s.gamma > 0 && s.gamma < 1))
              throw ConfigError("bounded_below needs 0 < gamma < 1");
            require_r(s.r);
            validate(s.law);
            if (law_range(s.law).lo < -s.m)
              throw ConfigError("bounded_below increments must not fall below -m");
            require_nonpositive_mean(s.law, "bounded_below");
            power_constant_ = power_slack(s.gamma, s.r);
            cert_ = {K::Restricted, s.gamma / s.m, s.r, "increments bounded below, power compensator"};
          },
          [&](const spec::BrownianGrid &s) {
            validate_grid(s.grid);
            if (s.grid.kind == TimeGrid::Kind::Explicit)
              max_steps_ = s.grid.times.size();
            cert_ = {K::AllReal, 0, 2, "Brownian motion on a grid"};
          },
          [&](const spec::MvBrownianGrid &s) {
            if (s.dim < 1)
              throw ConfigError("mv_brownian_grid needs dim >= 1");
            validate_grid(s.grid);
            if (s.grid.kind == TimeGrid::Kind::Explicit)
              max_steps_ = s.grid.times.size();
            cert_ = {K::AllReal, 0, 2, "first Brownian coordinate"};
          },
          [&](const spec::TruncatedCentering &s) {
            if (!(s.lambda > 0))
              throw ConfigError("truncated_centering needs lambda > 0");
            validate(s.law);
            lil_ = lil_constants(s.lambda);
            if (is_symmetric(s.law))
              cert_ = {K::AllReal, 0, 2, "symmetric i.i.d. increments"};
            else
              cert_ = {K::None, 0, 2, "i.i.d. increments without a martingale certificate"};
          },
          [&](const spec::WeightedIID &s) {
            if (!std::holds_alternative<RademacherLaw>(s.law) && !std::holds_alternative<NormalLaw>(s.law))
              throw ConfigError("weighted_iid supports rademacher or normal base laws");
            validate(s.law);
            if (s.rule == spec::WeightRule::Factorial)
              max_steps_ = kFactorialSteps;
            cert_ = {K::AllReal, 0, 2, "symmetric base law with predictable weights"};
          },
          [&](const spec::ThreePointJump &) {
            cert_ = {K::None, 0, 2, "three-point sequence (no certificate)"};
          },
          [&](const spec::ThreePointTruncated &) {
            cert_ = {K::None, 0, 2, "three-point sequence (no certificate)"};
          },
      },
      spec_);
}

bool PreparedSpec::has_law() const
{
  return !std::holds_alternative<spec::MvBrownianGrid>(spec_);
}

Law PreparedSpec::law_at(std::uint64_t n) const
{
  if (n == 0)
    throw DomainError("increment index starts at 1");
  return std::visit(
      Overloaded{
          [](const spec::Rademacher &) -> Law { return RademacherLaw{}; },
          [](const spec::ScaledSymmetric &s) -> Law { return SignedScaleLaw{s.scale}; },
          [](const spec::BoundedAbove &s) -> Law { return s.law; },
          [](const spec::Bernstein &s) -> Law { return CenteredExponentialLaw{s.m}; },
          [](const spec::BoundedBelow &s) -> Law { return s.law; },
          [n](const spec::BrownianGrid &s) -> Law {
            return NormalLaw{std::sqrt(s.grid.time(n) - s.grid.time(n - 1))};
          },
          [](const spec::MvBrownianGrid &) -> Law {
            throw UnsupportedError("the multivariate generator has no scalar increment law");
          },
          [](const spec::TruncatedCentering &s) -> Law { return s.law; },
          [n](const spec::WeightedIID &s) -> Law {
            const double w = weight_at(n, s.rule);
            if (std::holds_alternative<RademacherLaw>(s.law))
              return TwoPointLaw{-w, w, 0.5};
            return NormalLaw{w * std::get<NormalLaw>(s.law).sd};
          },
          [n](const spec::ThreePointJump &) -> Law { return three_point_law(n); },
          [n](const spec::ThreePointTruncated &) -> Law { return three_point_law(n); },
      },
      spec_);
}

TruncatedTracking prepare_tracking(TruncatedTracking p)
{
  require_r(p.r);
  if (!(p.scale > 0))
    throw ConfigError("truncated tracking needs scale > 0");
  if (p.schedule) {
    if (p.r != 2)
      throw ConfigError("per-step schedules are supported for r = 2 only");
    return p;
  }
  if (!(p.gamma >= 0 && p.gamma < 1))
    throw ConfigError("truncated tracking needs 0 <= gamma < 1");
  if (p.r < 2 && !(p.gamma > 0))
    throw ConfigError("truncated tracking with r < 2 needs gamma > 0");
  p.slack = p.r == 2 ? quadratic_slack(p.gamma) : power_slack(p.gamma, p.r);
  if (!(p.lambda > 0) || p.lambda * p.slack > 1 + 1e-12) {
    std::ostringstream os;
    os << "truncated tracking needs 0 < lambda <= " << 1 / p.slack << " for gamma = " << p.gamma
       << ", r = " << p.r;
    throw ConfigError(os.str());
  }
  return p;
}

Process::Process(std::shared_ptr<const PreparedSpec> spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed)
{
  if (const auto *mv = std::get_if<spec::MvBrownianGrid>(&spec_->spec())) {
    state_.mv_sum = Eigen::VectorXd::Zero(mv->dim);
    state_.mv_qv = Eigen::MatrixXd::Zero(mv->dim, mv->dim);
  }
}

std::size_t Process::track_truncated(TruncatedTracking params)
{
  if (state_.n != 0)
    throw ConfigError("truncated supermartingales must be registered before the first step");
  if (!spec_->has_law())
    throw UnsupportedError("truncated supermartingale needs a scalar increment law");
  if (params.slack == 0 || params.schedule)
    params = prepare_tracking(std::move(params));
  trackers_.push_back({std::move(params), {}, false});
  return trackers_.size() - 1;
}

void Process::advance_trackers(double x)
{
  if (trackers_.empty())
    return;
  const std::uint64_t n = state_.n + 1;
  const Law law = spec_->law_at(n);
  for (auto &t : trackers_) {
    if (t.vanished)
      continue;
    double gamma = t.params.gamma, lambda = t.params.lambda;
    if (t.params.schedule) {
      std::tie(gamma, lambda) = t.params.schedule(state_);
      if (!(gamma >= 0 && gamma < 1) || !(lambda > 0) || lambda * quadratic_slack(gamma) > 1 + 1e-12)
        throw ConfigError("scheduled truncation parameters out of range");
    }
    const double r = t.params.r, s = t.params.scale;
    const double upper = std::pow(lambda, 1 / (r - 1));
    const double mu = selfnorm::truncated_mean(law, -gamma * s, upper * s) / s;
    const double y = x / s;
    const double term = y - mu - std::pow(std::fabs(y), r) / lambda;
    if (!std::isfinite(term)) {
      t.vanished = true;
      continue;
    }
    t.log_value += term;
  }
}

const PathState &Process::step()
{
  const std::uint64_t n = state_.n + 1;
  if (n > spec_->max_steps())
    throw DomainError("process horizon exceeded for this generator");
  PathState &st = state_;
  double x = 0;
  std::visit(
      Overloaded{
          [&](const spec::Rademacher &) {
            x = rng_.sign();
            advance_trackers(x);
            v_ += 1;
            b_ += 1;
            cond_var_ += 1;
          },
          [&](const spec::ScaledSymmetric &s) {
            const Law law = SignedScaleLaw{s.scale};
            x = sample(law, rng_);
            advance_trackers(x);
            v_ += x * x;
            b_ += x * x;
            const double m2 = second_moment(law);
            if (std::isfinite(m2))
              cond_var_ += m2;
          },
          [&](const spec::BoundedAbove &s) {
            x = sample(s.law, rng_);
            advance_trackers(x);
            v_ += x * x;
            cond_var_ += second_moment(s.law);
            st.b_pow_r = (1 + 0.5 * s.lambda0 * s.m) * cond_var_.value();
          },
          [&](const spec::Bernstein &s) {
            x = s.m * (rng_.exponential() - 1);
            advance_trackers(x);
            v_ += x * x;
            cond_var_ += s.m * s.m;
            st.b_pow_r = cond_var_.value() / s.rho;
          },
          [&](const spec::BoundedBelow &s) {
            x = sample(s.law, rng_);
            advance_trackers(x);
            v_ += x * x;
            b_ += s.r * spec_->power_constant() * std::pow(std::fabs(x), s.r);
            const double m2 = second_moment(s.law);
            if (std::isfinite(m2))
              cond_var_ += m2;
          },
          [&](const spec::BrownianGrid &s) {
            const double t = s.grid.time(n);
            x = std::sqrt(t - st.time) * rng_.normal();
            advance_trackers(x);
            v_ += x * x;
            st.time = t;
            st.b_pow_r = t;
            st.cond_var = t;
          },
          [&](const spec::MvBrownianGrid &s) {
            const double t = s.grid.time(n);
            const double sd = std::sqrt(t - st.time);
            for (int k = 0; k < s.dim; ++k)
              st.mv_sum(k) += sd * rng_.normal();
            x = st.mv_sum(0) - st.a_n;
            v_ += x * x;
            st.time = t;
            st.mv_qv.setIdentity();
            st.mv_qv *= t;
            st.b_pow_r = t;
            st.cond_var = t;
          },
          [&](const spec::TruncatedCentering &s) {
            x = sample(s.law, rng_);
            advance_trackers(x);
            v_ += x * x;
            b_ += x * x;
            const double m2 = second_moment(s.law);
            if (std::isfinite(m2))
              cond_var_ += m2;
          },
          [&](const spec::WeightedIID &s) {
            const double w = weight_at(n, s.rule);
            x = w * sample(s.law, rng_);
            advance_trackers(x);
            v_ += x * x;
            b_ += x * x;
            cond_var_ += w * w * second_moment(s.law);
          },
          [&](const auto &) {
            // Three-point variants.
            const DiscreteLaw law = three_point_law(n);
            x = sample(law, rng_);
            advance_trackers(x);
            v_ += x * x;
            b_ += x * x;
            cond_var_ += second_moment(law);
            if (std::fabs(x) <= 1) {
              trunc_ += x;
              trunc_sq_ += x * x;
            }
            trunc_mean_ += selfnorm::truncated_mean(law, -1.0, std::nextafter(1.0, 2.0));
          },
      },
      spec_->spec());

  st.n = n;
  st.last = x;
  if (std::holds_alternative<spec::MvBrownianGrid>(spec_->spec()))
    st.a_n = st.mv_sum(0);
  else {
    a_ += x;
    st.a_n = a_.value();
  }
  st.v_n_sq = v_.value();
  if (std::holds_alternative<spec::Rademacher>(spec_->spec())
      || std::holds_alternative<spec::ScaledSymmetric>(spec_->spec())
      || std::holds_alternative<spec::BoundedBelow>(spec_->spec())
      || std::holds_alternative<spec::TruncatedCentering>(spec_->spec())
      || std::holds_alternative<spec::WeightedIID>(spec_->spec())
      || std::holds_alternative<spec::ThreePointJump>(spec_->spec())
      || std::holds_alternative<spec::ThreePointTruncated>(spec_->spec()))
    st.b_pow_r = b_.value();
  if (!std::holds_alternative<spec::BrownianGrid>(spec_->spec())
      && !std::holds_alternative<spec::MvBrownianGrid>(spec_->spec()))
    st.cond_var = cond_var_.value();
  st.trunc_sum = trunc_.value();
  st.trunc_sq_sum = trunc_sq_.value();
  st.trunc_mean_sum = trunc_mean_.value();

  if (const auto *tc = std::get_if<spec::TruncatedCentering>(&spec_->spec())) {
    const double big_v = std::sqrt(st.v_n_sq);
    if (big_v > 0) {
      const double small_v = big_v / std::sqrt(std::log(std::log(std::max(big_v, kIteratedLogFloor))));
      const auto &k = spec_->lil();
      st.mu_sum = static_cast<double>(n)
          * selfnorm::truncated_mean(tc->law, -tc->lambda * small_v, k.upper_scale * small_v);
    }
  }
  return st;
}

double Process::truncated_mean(std::uint64_t n, double c, double d) const
{
  return selfnorm::truncated_mean(spec_->law_at(n), c, d);
}

double Process::log_exp_supermartingale(double lambda) const
{
  if (lambda == 0)
    return 0.0;
  const auto &cert = spec_->certification();
  if (!cert.covers(lambda)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " is outside the certified range of " << process_name(spec_->spec());
    if (cert.kind == Certification::Kind::Restricted)
      os << " [0, " << cert.lambda_max << "]";
    else if (cert.kind == Certification::Kind::None)
      os << " (no certificate)";
    throw CertificationError(os.str());
  }
  return lambda * state_.a_n - std::pow(std::fabs(lambda), cert.r) * state_.b_pow_r / cert.r;
}

double Process::exp_supermartingale_value(double lambda) const
{
  return std::exp(log_exp_supermartingale(lambda));
}

double Process::log_truncated_supermartingale(std::size_t index) const
{
  const auto &t = trackers_.at(index);
  if (t.vanished)
    return -std::numeric_limits<double>::infinity();
  return t.log_value.value();
}

double Process::truncated_supermartingale_value(std::size_t index) const
{
  return std::exp(log_truncated_supermartingale(index));
}

} // namespace selfnorm
