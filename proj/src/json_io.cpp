#include "swarmsense/json_io.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "swarmsense/error.h"

namespace swarmsense {

namespace {

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

Json signal_to_json(const SignalDescriptor& s) { return Json{{"mean", s.mean}, {"sigma", s.sigma}}; }

SignalDescriptor signal_from_json(const Json& j, const std::string& key, int channels, const SignalDescriptor& dflt) {
  SignalDescriptor s = dflt;
  if (j.is_number()) {
    s.mean.assign(static_cast<std::size_t>(channels), j.get<double>());
    return s;
  }
  if (!j.is_object()) throw ConfigError(key, "expected an object {mean, sigma} or a number");
  reject_unknown_keys(j, {"mean", "sigma"}, key);
  if (j.contains("mean")) {
    const Json& m = j.at("mean");
    if (m.is_number()) {
      s.mean.assign(static_cast<std::size_t>(channels), m.get<double>());
    } else if (m.is_array()) {
      s.mean.clear();
      for (const Json& v : m) {
        if (!v.is_number()) throw ConfigError(key + ".mean", "expected numbers");
        s.mean.push_back(v.get<double>());
      }
    } else {
      throw ConfigError(key + ".mean", "expected a number or an array");
    }
  } else if (static_cast<int>(s.mean.size()) != channels) {
    s.mean.assign(static_cast<std::size_t>(channels), s.mean.empty() ? 0.0 : s.mean.front());
  }
  s.sigma = read_number_or(j, "sigma", s.sigma, key);
  return s;
}

const char* kind_name(SignalKind k) { return k == SignalKind::Color ? "color" : "thermal"; }

}  // namespace

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "document" : path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; });
    if (!ok) throw ConfigError(join(path, item.key().c_str()), "unknown key");
  }
}

double read_number(const Json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(join(path, key), "missing required key");
  const Json& v = obj.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    // Numbers quoted as strings are accepted and range-checked like any other.
    const std::string& s = v.get_ref<const std::string&>();
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == s.size() && used > 0) return d;
  }
  throw ConfigError(join(path, key), "expected a number");
}

double read_number_or(const Json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  return read_number(obj, key, path);
}

std::uint64_t read_u64_or(const Json& obj, const char* key, std::uint64_t fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(join(path, key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

int read_int_or(const Json& obj, const char* key, int fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<int>();
}

Json scenario_to_json(const Scenario& sc) {
  Json wps = Json::array();
  for (const auto& w : sc.target.waypoints) wps.push_back(Json::array({w.time, w.position.x, w.position.y}));
  return Json{
      {"bounds", {sc.bounds.min_x, sc.bounds.min_y, sc.bounds.max_x, sc.bounds.max_y}},
      {"forest_density", sc.forest_density},
      {"canopy_height", sc.canopy_height},
      {"crown_radius_range", {sc.crown_radius_min, sc.crown_radius_max}},
      {"target",
       {{"waypoints", wps}, {"bbox_size", {sc.target.length, sc.target.width}}, {"signal_kind", kind_name(sc.target.kind)}}},
      {"background_signal", signal_to_json(sc.background_signal)},
      {"occluder_signal", signal_to_json(sc.occluder_signal)},
      {"target_signal", signal_to_json(sc.target_signal)},
      {"seed", sc.seed},
  };
}

Scenario scenario_from_json(const Json& doc) {
  reject_unknown_keys(doc,
                      {"bounds", "forest_density", "canopy_height", "crown_radius_range", "target", "background_signal",
                       "occluder_signal", "target_signal", "seed"},
                      "");
  Scenario sc;
  if (doc.contains("bounds")) {
    const Json& b = doc.at("bounds");
    if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const Json& v) { return v.is_number(); })) {
      throw ConfigError("bounds", "expected [min_x, min_y, max_x, max_y]");
    }
    sc.bounds = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  }
  sc.forest_density = read_number(doc, "forest_density", "");
  sc.canopy_height = read_number_or(doc, "canopy_height", sc.canopy_height, "");
  if (doc.contains("crown_radius_range")) {
    const Json& r = doc.at("crown_radius_range");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
      throw ConfigError("crown_radius_range", "expected [min, max]");
    }
    sc.crown_radius_min = r[0].get<double>();
    sc.crown_radius_max = r[1].get<double>();
  }
  if (!doc.contains("target")) throw ConfigError("target", "missing required key");
  const Json& t = doc.at("target");
  reject_unknown_keys(t, {"waypoints", "bbox_size", "signal_kind"}, "target");
  if (!t.contains("waypoints")) throw ConfigError("target.waypoints", "missing required key");
  const Json& wps = t.at("waypoints");
  if (!wps.is_array()) throw ConfigError("target.waypoints", "expected an array of [time, x, y]");
  for (const Json& w : wps) {
    if (!w.is_array() || w.size() != 3 || !w[0].is_number() || !w[1].is_number() || !w[2].is_number()) {
      throw ConfigError("target.waypoints", "expected [time, x, y] entries");
    }
    sc.target.waypoints.push_back({w[0].get<double>(), {w[1].get<double>(), w[2].get<double>()}});
  }
  if (t.contains("bbox_size")) {
    const Json& b = t.at("bbox_size");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw ConfigError("target.bbox_size", "expected [length, width]");
    }
    sc.target.length = b[0].get<double>();
    sc.target.width = b[1].get<double>();
  }
  if (t.contains("signal_kind")) {
    const Json& k = t.at("signal_kind");
    if (k == "color") {
      sc.target.kind = SignalKind::Color;
    } else if (k == "thermal") {
      sc.target.kind = SignalKind::Thermal;
    } else {
      throw ConfigError("target.signal_kind", "expected \"color\" or \"thermal\"");
    }
  }
  const int ch = sc.channels();
  if (ch == 3) {
    // Colour defaults: grey-green floor, dark canopy, saturated target.
    sc.background_signal = {{0.45, 0.40, 0.30}, 0.03};
    sc.occluder_signal = {{0.20, 0.35, 0.15}, 0.03};
    sc.target_signal = {{0.90, 0.10, 0.10}, 0.02};
  }
  sc.background_signal = signal_from_json(doc.value("background_signal", Json::object()), "background_signal", ch,
                                          sc.background_signal);
  sc.occluder_signal =
      signal_from_json(doc.value("occluder_signal", Json::object()), "occluder_signal", ch, sc.occluder_signal);
  sc.target_signal = signal_from_json(doc.value("target_signal", Json::object()), "target_signal", ch, sc.target_signal);
  sc.seed = read_u64_or(doc, "seed", sc.seed, "");
  validate(sc);
  return sc;
}

}  // namespace swarmsense
