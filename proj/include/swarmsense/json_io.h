#pragma once

#include "json.hpp"

#include "swarmsense/scenario.h"

namespace swarmsense {

using Json = nlohmann::json;

Json scenario_to_json(const Scenario& scenario);

// Strict: rejects unknown keys, fills defaults, validates ranges.
Scenario scenario_from_json(const Json& doc);

// Helpers shared by the configuration readers. `path` prefixes key names in errors.
void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& path);
double read_number(const Json& obj, const char* key, const std::string& path);
double read_number_or(const Json& obj, const char* key, double fallback, const std::string& path);
std::uint64_t read_u64_or(const Json& obj, const char* key, std::uint64_t fallback, const std::string& path);
int read_int_or(const Json& obj, const char* key, int fallback, const std::string& path);

}  // namespace swarmsense
