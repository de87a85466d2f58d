#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfnorm/experiments.hpp"
#include "selfnorm/mixture.hpp"
#include "selfnorm/processes.hpp"

// JSON forms of laws, generators, mixing measures and reports. Every parser
// rejects unknown keys and throws ConfigError with the offending path.
namespace selfnorm::io {

using Json = nlohmann::json;

inline constexpr int kSchema = 1;

Law law_from_json(const Json &j);
Json to_json(const Law &law);

TimeGrid grid_from_json(const Json &j);
Json to_json(const TimeGrid &g);

ProcessSpec process_from_json(const Json &j);
Json to_json(const ProcessSpec &s);

// {"type": "point_masses" | "density_rs" | "uniform_density", ...}
MixtureMeasure mixture_from_json(const Json &j);
// {"type": "gaussian", "precision": [[...], ...]}
GaussianMixture gaussian_from_json(const Json &j);

TruncatedTracking tracker_from_json(const Json &j);

Json to_json(const BoundReport &r);

// Shared field helpers.
double get_number(const Json &j, const char *key, double fallback);
double require_number(const Json &j, const char *key);
std::uint64_t to_count(const Json &j, const std::string &what);
std::vector<double> number_list(const Json &j, const std::string &what);
void allow_keys(const Json &j, std::initializer_list<const char *> keys, const std::string &where);

// %.17g, empty for NaN.
std::string csv_number(double v);

Json read_json_file(const std::string &path);

} // namespace selfnorm::io
