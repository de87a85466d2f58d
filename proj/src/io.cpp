#include "selfnorm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "selfnorm/error.hpp"

namespace selfnorm::io {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string type_of(const Json &j, const std::string &where)
{
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ConfigError(where + ": expected an object with a string \"type\"");
  return j["type"].get<std::string>();
}

} // namespace

void allow_keys(const Json &j, std::initializer_list<const char *> keys, const std::string &where)
{
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (const auto &item : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char *k) { return item.key() == k; });
    if (!known)
      throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
  }
}

double get_number(const Json &j, const char *key, double fallback)
{
  if (!j.contains(key))
    return fallback;
  if (!j[key].is_number())
    throw ConfigError(std::string("\"") + key + "\" must be a number");
  return j[key].get<double>();
}

double require_number(const Json &j, const char *key)
{
  if (!j.contains(key))
    throw ConfigError(std::string("missing required number \"") + key + "\"");
  return get_number(j, key, 0);
}

std::uint64_t to_count(const Json &j, const std::string &what)
{
  if (j.is_number_unsigned())
    return j.get<std::uint64_t>();
  if (j.is_number()) {
    const double v = j.get<double>();
    if (v >= 0 && v == std::floor(v) && v < 1.8e19)
      return static_cast<std::uint64_t>(v);
  }
  throw ConfigError(what + " must be a nonnegative integer");
}

std::vector<double> number_list(const Json &j, const std::string &what)
{
  if (!j.is_array())
    throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto &v : j) {
    if (!v.is_number())
      throw ConfigError(what + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Law law_from_json(const Json &j)
{
  const std::string t = type_of(j, "law");
  const std::string where = "law \"" + t + "\"";
  Law law;
  if (t == "rademacher") {
    allow_keys(j, {"type"}, where);
    law = RademacherLaw{};
  } else if (t == "normal") {
    allow_keys(j, {"type", "sd"}, where);
    law = NormalLaw{get_number(j, "sd", 1.0)};
  } else if (t == "signed_lognormal") {
    allow_keys(j, {"type", "mu", "sigma"}, where);
    law = SignedScaleLaw{LognormalScale{get_number(j, "mu", 0.0), get_number(j, "sigma", 1.0)}};
  } else if (t == "signed_pareto") {
    allow_keys(j, {"type", "alpha"}, where);
    law = SignedScaleLaw{ParetoScale{require_number(j, "alpha")}};
  } else if (t == "two_point") {
    allow_keys(j, {"type", "low", "high", "p_high"}, where);
    law = TwoPointLaw{require_number(j, "low"), require_number(j, "high"), require_number(j, "p_high")};
  } else if (t == "uniform") {
    allow_keys(j, {"type", "lo", "hi"}, where);
    law = UniformLaw{require_number(j, "lo"), require_number(j, "hi")};
  } else if (t == "centered_exponential") {
    allow_keys(j, {"type", "scale"}, where);
    law = CenteredExponentialLaw{get_number(j, "scale", 1.0)};
  } else if (t == "two_sided_pareto") {
    allow_keys(j, {"type", "alpha", "d1", "d2"}, where);
    law = TwoSidedParetoLaw{require_number(j, "alpha"), require_number(j, "d1"), require_number(j, "d2")};
  } else if (t == "discrete") {
    allow_keys(j, {"type", "values", "probs"}, where);
    const auto v = number_list(j.value("values", Json::array()), "discrete values");
    const auto p = number_list(j.value("probs", Json::array()), "discrete probs");
    if (v.size() != p.size() || v.empty() || v.size() > 3)
      throw ConfigError("discrete law needs 1 to 3 values with matching probs");
    DiscreteLaw d;
    for (std::size_t i = 0; i < v.size(); ++i) {
      d.values[i] = v[i];
      d.probs[i] = p[i];
    }
    law = d;
  } else {
    throw ConfigError("unknown law type \"" + t + "\"");
  }
  try {
    validate(law);
  } catch (const DomainError &e) {
    throw ConfigError(where + ": " + e.what());
  }
  return law;
}

Json to_json(const Law &law)
{
  return std::visit(
      Overloaded{
          [](const RademacherLaw &) { return Json{{"type", "rademacher"}}; },
          [](const NormalLaw &l) { return Json{{"type", "normal"}, {"sd", l.sd}}; },
          [](const SignedScaleLaw &l) {
            return std::visit(Overloaded{
                                  [](const LognormalScale &s) {
                                    return Json{{"type", "signed_lognormal"}, {"mu", s.mu}, {"sigma", s.sigma}};
                                  },
                                  [](const ParetoScale &s) { return Json{{"type", "signed_pareto"}, {"alpha", s.alpha}}; },
                              },
                l.scale);
          },
          [](const TwoPointLaw &l) {
            return Json{{"type", "two_point"}, {"low", l.low}, {"high", l.high}, {"p_high", l.p_high}};
          },
          [](const UniformLaw &l) { return Json{{"type", "uniform"}, {"lo", l.lo}, {"hi", l.hi}}; },
          [](const CenteredExponentialLaw &l) { return Json{{"type", "centered_exponential"}, {"scale", l.scale}}; },
          [](const TwoSidedParetoLaw &l) {
            return Json{{"type", "two_sided_pareto"}, {"alpha", l.alpha}, {"d1", l.d1}, {"d2", l.d2}};
          },
          [](const DiscreteLaw &l) {
            Json values = Json::array(), probs = Json::array();
            for (int i = 0; i < 3; ++i)
              if (l.probs[i] > 0) {
                values.push_back(l.values[i]);
                probs.push_back(l.probs[i]);
              }
            return Json{{"type", "discrete"}, {"values", values}, {"probs", probs}};
          },
      },
      law);
}

TimeGrid grid_from_json(const Json &j)
{
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("time grid: expected an object with a string \"kind\"");
  const std::string kind = j["kind"];
  TimeGrid g;
  if (kind == "uniform") {
    allow_keys(j, {"kind", "dt"}, "uniform time grid");
    g.kind = TimeGrid::Kind::Uniform;
    g.dt = get_number(j, "dt", 1.0);
  } else if (kind == "geometric") {
    allow_keys(j, {"kind", "t0", "ratio"}, "geometric time grid");
    g.kind = TimeGrid::Kind::Geometric;
    g.t0 = get_number(j, "t0", 1e-4);
    g.ratio = get_number(j, "ratio", 1.002);
  } else if (kind == "explicit") {
    allow_keys(j, {"kind", "times"}, "explicit time grid");
    g.kind = TimeGrid::Kind::Explicit;
    g.times = number_list(j.value("times", Json::array()), "explicit grid times");
  } else {
    throw ConfigError("unknown time grid kind \"" + kind + "\"");
  }
  return g;
}

Json to_json(const TimeGrid &g)
{
  switch (g.kind) {
  case TimeGrid::Kind::Uniform:
    return {{"kind", "uniform"}, {"dt", g.dt}};
  case TimeGrid::Kind::Geometric:
    return {{"kind", "geometric"}, {"t0", g.t0}, {"ratio", g.ratio}};
  case TimeGrid::Kind::Explicit:
    return {{"kind", "explicit"}, {"times", g.times}};
  }
  return {};
}

ProcessSpec process_from_json(const Json &j)
{
  const std::string t = type_of(j, "process");
  const std::string where = "process \"" + t + "\"";
  ProcessSpec s;
  if (t == "rademacher") {
    allow_keys(j, {"type"}, where);
    s = spec::Rademacher{};
  } else if (t == "scaled_symmetric") {
    allow_keys(j, {"type", "scale"}, where);
    if (!j.contains("scale"))
      throw ConfigError(where + " needs a \"scale\" law");
    const Json &sc = j["scale"];
    const std::string st = type_of(sc, "scale law");
    spec::ScaledSymmetric v;
    if (st == "lognormal") {
      allow_keys(sc, {"type", "mu", "sigma"}, "lognormal scale");
      v.scale = LognormalScale{get_number(sc, "mu", 0.0), get_number(sc, "sigma", 1.0)};
    } else if (st == "pareto") {
      allow_keys(sc, {"type", "alpha"}, "pareto scale");
      v.scale = ParetoScale{require_number(sc, "alpha")};
    } else {
      throw ConfigError("unknown scale law \"" + st + "\"");
    }
    s = v;
  } else if (t == "bounded_above") {
    allow_keys(j, {"type", "m", "lambda0", "law"}, where);
    spec::BoundedAbove v;
    v.m = get_number(j, "m", v.m);
    v.lambda0 = get_number(j, "lambda0", v.lambda0);
    if (j.contains("law"))
      v.law = law_from_json(j["law"]);
    s = v;
  } else if (t == "bernstein") {
    allow_keys(j, {"type", "m", "rho"}, where);
    spec::Bernstein v;
    v.m = get_number(j, "m", v.m);
    v.rho = get_number(j, "rho", v.rho);
    s = v;
  } else if (t == "bounded_below") {
    allow_keys(j, {"type", "m", "gamma", "r", "law"}, where);
    spec::BoundedBelow v;
    v.m = get_number(j, "m", v.m);
    v.gamma = get_number(j, "gamma", v.gamma);
    v.r = get_number(j, "r", v.r);
    if (j.contains("law"))
      v.law = law_from_json(j["law"]);
    s = v;
  } else if (t == "brownian_grid") {
    allow_keys(j, {"type", "grid"}, where);
    spec::BrownianGrid v;
    if (j.contains("grid"))
      v.grid = grid_from_json(j["grid"]);
    s = v;
  } else if (t == "mv_brownian_grid") {
    allow_keys(j, {"type", "dim", "grid"}, where);
    spec::MvBrownianGrid v;
    if (j.contains("dim"))
      v.dim = static_cast<int>(to_count(j["dim"], "dim"));
    if (j.contains("grid"))
      v.grid = grid_from_json(j["grid"]);
    s = v;
  } else if (t == "truncated_centering") {
    allow_keys(j, {"type", "law", "lambda"}, where);
    spec::TruncatedCentering v;
    if (j.contains("law"))
      v.law = law_from_json(j["law"]);
    v.lambda = get_number(j, "lambda", v.lambda);
    s = v;
  } else if (t == "weighted_iid") {
    allow_keys(j, {"type", "weights", "law"}, where);
    spec::WeightedIID v;
    const std::string w = j.value("weights", std::string("unit"));
    if (w == "unit")
      v.rule = spec::WeightRule::Unit;
    else if (w == "factorial")
      v.rule = spec::WeightRule::Factorial;
    else
      throw ConfigError("weights must be \"unit\" or \"factorial\"");
    if (j.contains("law"))
      v.law = law_from_json(j["law"]);
    s = v;
  } else if (t == "three_point_jump") {
    allow_keys(j, {"type"}, where);
    s = spec::ThreePointJump{};
  } else if (t == "three_point_truncated") {
    allow_keys(j, {"type"}, where);
    s = spec::ThreePointTruncated{};
  } else {
    throw ConfigError("unknown process type \"" + t + "\"");
  }
  try {
    PreparedSpec check(s);
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

Json to_json(const ProcessSpec &s)
{
  Json j = std::visit(
      Overloaded{
          [](const spec::Rademacher &) { return Json::object(); },
          [](const spec::ScaledSymmetric &v) {
            Json law = to_json(Law{SignedScaleLaw{v.scale}});
            Json scale = std::holds_alternative<LognormalScale>(v.scale)
                ? Json{{"type", "lognormal"}, {"mu", law["mu"]}, {"sigma", law["sigma"]}}
                : Json{{"type", "pareto"}, {"alpha", law["alpha"]}};
            return Json{{"scale", scale}};
          },
          [](const spec::BoundedAbove &v) {
            return Json{{"m", v.m}, {"lambda0", v.lambda0}, {"law", to_json(v.law)}};
          },
          [](const spec::Bernstein &v) { return Json{{"m", v.m}, {"rho", v.rho}}; },
          [](const spec::BoundedBelow &v) {
            return Json{{"m", v.m}, {"gamma", v.gamma}, {"r", v.r}, {"law", to_json(v.law)}};
          },
          [](const spec::BrownianGrid &v) { return Json{{"grid", to_json(v.grid)}}; },
          [](const spec::MvBrownianGrid &v) { return Json{{"dim", v.dim}, {"grid", to_json(v.grid)}}; },
          [](const spec::TruncatedCentering &v) { return Json{{"law", to_json(v.law)}, {"lambda", v.lambda}}; },
          [](const spec::WeightedIID &v) {
            return Json{{"weights", v.rule == spec::WeightRule::Unit ? "unit" : "factorial"}, {"law", to_json(v.law)}};
          },
          [](const auto &) { return Json::object(); },
      },
      s);
  j["type"] = process_name(s);
  return j;
}

MixtureMeasure mixture_from_json(const Json &j)
{
  const std::string t = type_of(j, "mixture");
  try {
    if (t == "point_masses") {
      allow_keys(j, {"type", "atoms"}, "point_masses mixture");
      if (!j.contains("atoms") || !j["atoms"].is_array())
        throw ConfigError("point_masses mixture needs an \"atoms\" array");
      PointMasses pm;
      for (const auto &a : j["atoms"]) {
        allow_keys(a, {"lambda", "weight"}, "point mass");
        pm.atoms.push_back({require_number(a, "lambda"), require_number(a, "weight")});
      }
      return MixtureMeasure(pm);
    }
    if (t == "density_rs") {
      allow_keys(j, {"type", "delta"}, "density_rs mixture");
      return MixtureMeasure(IteratedLogDensity{get_number(j, "delta", 1.0)});
    }
    if (t == "uniform_density") {
      allow_keys(j, {"type", "lo", "hi", "height"}, "uniform_density mixture");
      return MixtureMeasure(
          UniformDensity{get_number(j, "lo", 0.0), get_number(j, "hi", 1.0), get_number(j, "height", 1.0)});
    }
  } catch (const DomainError &e) {
    throw ConfigError("mixture \"" + t + "\": " + e.what());
  }
  if (t == "gaussian")
    throw ConfigError("gaussian mixtures are multivariate; use a gaussian crossing check");
  throw ConfigError("unknown mixture type \"" + t + "\"");
}

GaussianMixture gaussian_from_json(const Json &j)
{
  if (type_of(j, "gaussian mixture") != "gaussian")
    throw ConfigError("expected a mixture of type \"gaussian\"");
  allow_keys(j, {"type", "precision", "dim"}, "gaussian mixture");
  Eigen::MatrixXd v;
  if (j.contains("precision")) {
    const Json &rows = j["precision"];
    if (!rows.is_array() || rows.empty())
      throw ConfigError("gaussian precision must be a nonempty array of rows");
    const auto m = static_cast<Eigen::Index>(rows.size());
    v.resize(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto row = number_list(rows[static_cast<std::size_t>(r)], "gaussian precision row");
      if (static_cast<Eigen::Index>(row.size()) != m)
        throw ConfigError("gaussian precision must be square");
      for (Eigen::Index c = 0; c < m; ++c)
        v(r, c) = row[static_cast<std::size_t>(c)];
    }
  } else {
    const auto m = static_cast<Eigen::Index>(to_count(j.value("dim", Json(1)), "dim"));
    v = Eigen::MatrixXd::Identity(m, m);
  }
  try {
    return GaussianMixture(v);
  } catch (const DomainError &e) {
    throw ConfigError(std::string("gaussian mixture: ") + e.what());
  }
}

TruncatedTracking tracker_from_json(const Json &j)
{
  allow_keys(j, {"gamma", "lambda", "r", "scale"}, "tracker");
  TruncatedTracking t;
  t.gamma = get_number(j, "gamma", t.gamma);
  t.r = get_number(j, "r", t.r);
  t.scale = get_number(j, "scale", t.scale);
  if (j.contains("lambda") && j["lambda"].is_string()) {
    if (j["lambda"] != "max")
      throw ConfigError("tracker lambda must be a number or \"max\"");
    t.lambda = 1 / (t.r == 2 ? quadratic_slack(t.gamma) : power_slack(t.gamma, t.r));
  } else {
    t.lambda = get_number(j, "lambda", t.lambda);
  }
  return prepare_tracking(t);
}

Json to_json(const BoundReport &r)
{
  Json j;
  j["label"] = r.label;
  j["rule"] = to_string(r.rule);
  j["process"] = r.process;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["paths"] = r.paths;
  j["k"] = r.k;
  j["pass"] = r.pass;
  j["n"] = r.n;
  const auto put = [&](const char *key, double v) {
    if (!std::isnan(v))
      j[key] = v;
  };
  put("analytic_bound", r.analytic_bound);
  put("interval_lo", r.interval_lo);
  put("interval_hi", r.interval_hi);
  put("time", r.time);
  put("lambda", r.lambda);
  put("x", r.x);
  put("p", r.p);
  if (!r.series.empty())
    j["series"] = r.series;
  return j;
}

std::string csv_number(double v)
{
  if (std::isnan(v))
    return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json read_json_file(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

} // namespace selfnorm::io
