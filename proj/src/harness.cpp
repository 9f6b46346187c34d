#include "swarmsense/harness.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "swarmsense/error.h"
#include "swarmsense/random.h"
#include "swarmsense/rx.h"

namespace swarmsense {

namespace {

constexpr int kLogVersion = 1;
constexpr const char* kEpsilonRule = "max(1e-6 * trace(K) / channels, 1e-12)";

Json vec2_json(Vec2 v) { return Json::array({v.x, v.y}); }

Json pose_json(const Pose& p) { return Json::array({p.position.x, p.position.y, p.position.z, p.heading}); }

// Unbounded limits are written as null.
Json bound_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Vec2 read_vec2(const Json& obj, const char* key, const std::string& path) {
  const Json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(path + "." + key, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

double read_bound_or(const Json& obj, const char* key, double fallback, const std::string& path) {
  if (obj.contains(key) && obj.at(key).is_null()) return std::numeric_limits<double>::infinity();
  return read_number_or(obj, key, fallback, path);
}

bool read_bool_or(const Json& obj, const char* key, bool fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw ConfigError(path + "." + key, "expected true or false");
  return obj.at(key).get<bool>();
}

const Json& section(const Json& doc, const char* key) {
  static const Json empty = Json::object();
  return doc.contains(key) ? doc.at(key) : empty;
}

Hyperparameters hyper_from_json(const Json& j) {
  const std::string p = "swarm";
  reject_unknown_keys(j, {"N", "c1", "c2", "c3", "c4", "c5", "s", "SD", "T", "fov", "safety_margin", "delta_h",
                          "advance", "c3_max"},
                      p);
  Hyperparameters h;
  h.N = read_int_or(j, "N", h.N, p);
  h.c1 = read_number_or(j, "c1", h.c1, p);
  h.c2 = read_number_or(j, "c2", h.c2, p);
  h.c3 = read_number_or(j, "c3", h.c3, p);
  h.c4 = read_number_or(j, "c4", h.c4, p);
  h.c5 = read_number_or(j, "c5", h.c5, p);
  h.s = read_number_or(j, "s", h.s, p);
  h.T = read_number_or(j, "T", h.T, p);
  h.fov = read_number_or(j, "fov", h.fov, p);
  h.safety_margin = read_number_or(j, "safety_margin", h.safety_margin, p);
  if (j.contains("SD")) {
    if (j.at("SD").is_array()) {
      const Vec2 v = read_vec2(j, "SD", p);
      if (!(v.norm() > 0.0)) throw ConfigError("swarm.SD", "must be a non-zero vector");
      h.sd = v / v.norm();
    } else {
      h.sd = heading_vector(read_number(j, "SD", p));
    }
  }
  if (j.contains("delta_h") && !j.at("delta_h").is_null()) h.delta_h = read_number(j, "delta_h", p);
  if (j.contains("c3_max") && !j.at("c3_max").is_null()) h.c3_max = read_number(j, "c3_max", p);
  if (j.contains("advance")) {
    const Json& a = j.at("advance");
    if (a == "c3") {
      h.advance = LineAdvance::ByC3;
    } else if (a == "s") {
      h.advance = LineAdvance::ByS;
    } else {
      throw ConfigError("swarm.advance", "expected \"c3\" or \"s\"");
    }
  }
  return h;
}

Json hyper_to_json(const Hyperparameters& h) {
  Json j{{"N", h.N},   {"c1", h.c1}, {"c2", h.c2},   {"c3", h.c3},   {"c4", h.c4},
         {"c5", h.c5}, {"s", h.s},   {"SD", vec2_json(h.sd)}, {"T", h.T}, {"fov", h.fov},
         {"safety_margin", h.safety_margin}, {"advance", h.advance == LineAdvance::ByC3 ? "c3" : "s"}};
  if (h.delta_h) j["delta_h"] = *h.delta_h;
  if (h.c3_max) j["c3_max"] = *h.c3_max;
  return j;
}

Json bbox_json(const OrientedBox& b) {
  return Json{{"center", vec2_json(b.center)}, {"axis", vec2_json(b.axis)}, {"length", b.length}, {"width", b.width}};
}

Vec2 vec2_of(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Pose pose_of(const Json& j) {
  return {{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}, j.at(3).get<double>()};
}

Json record_json(const IterationRecord& r, bool wall) {
  Json drones = Json::array();
  for (const auto& d : r.drones) {
    drones.push_back({{"true", pose_json(d.pose_true)}, {"reported", pose_json(d.pose_reported)},
                      {"heading_error", d.heading_error}});
  }
  Json blobs = Json::array();
  for (const auto& b : r.blobs) {
    blobs.push_back({{"bbox", {b.bbox.min_x, b.bbox.min_y, b.bbox.max_x, b.bbox.max_y}},
                     {"area", b.area},
                     {"area_m2", b.area_m2},
                     {"relevance", b.relevance},
                     {"centroid", {b.centroid.col, b.centroid.row}},
                     {"ground", vec2_json(b.ground)},
                     {"axes", {b.major_axis, b.minor_axis}}});
  }
  Json j{{"type", "iteration"},
         {"iter", r.iteration},
         {"time", r.time},
         {"branch", branch_name(r.branch)},
         {"mode", mode_name(r.mode)},
         {"drones", drones},
         {"confidence", r.confidence},
         {"reference", r.reference},
         {"reference_confidences", r.reference_confidences},
         {"blobs", blobs},
         {"verdict", verdict_name(r.verdict)},
         {"estimate", r.estimate ? vec2_json(*r.estimate) : Json(nullptr)},
         {"gt", {{"center", vec2_json(r.gt_center)}, {"bbox", bbox_json(r.gt_bbox)}}},
         {"distance", r.distance ? Json(*r.distance) : Json(nullptr)}};
  if (wall) j["wall_ms"] = r.wall_ms;
  return j;
}

IterationRecord record_of(const Json& j) {
  IterationRecord r;
  r.iteration = j.at("iter").get<int>();
  r.time = j.at("time").get<double>();
  r.branch = branch_from_name(j.at("branch").get<std::string>());
  r.mode = mode_from_name(j.at("mode").get<std::string>());
  for (const Json& d : j.at("drones")) {
    r.drones.push_back({pose_of(d.at("true")), pose_of(d.at("reported")), d.at("heading_error").get<double>()});
  }
  r.confidence = j.at("confidence").get<double>();
  r.reference = j.at("reference").get<int>();
  r.reference_confidences = j.at("reference_confidences").get<std::vector<double>>();
  for (const Json& b : j.at("blobs")) {
    BlobRecord br;
    const Json& bb = b.at("bbox");
    br.bbox = {bb.at(0).get<int>(), bb.at(1).get<int>(), bb.at(2).get<int>(), bb.at(3).get<int>()};
    br.area = b.at("area").get<int>();
    br.area_m2 = b.at("area_m2").get<double>();
    br.relevance = b.at("relevance").get<double>();
    br.centroid = {b.at("centroid").at(0).get<double>(), b.at("centroid").at(1).get<double>()};
    br.ground = vec2_of(b.at("ground"));
    br.major_axis = b.at("axes").at(0).get<double>();
    br.minor_axis = b.at("axes").at(1).get<double>();
    r.blobs.push_back(br);
  }
  r.verdict = verdict_from_name(j.at("verdict").get<std::string>());
  if (!j.at("estimate").is_null()) r.estimate = vec2_of(j.at("estimate"));
  r.gt_center = vec2_of(j.at("gt").at("center"));
  const Json& gb = j.at("gt").at("bbox");
  r.gt_bbox = {vec2_of(gb.at("center")), vec2_of(gb.at("axis")), gb.at("length").get<double>(),
               gb.at("width").get<double>()};
  if (!j.at("distance").is_null()) r.distance = j.at("distance").get<double>();
  r.wall_ms = j.value("wall_ms", 0.0);
  return r;
}

BlobRecord blob_record(const Blob& b) {
  return {b.bbox, b.area, b.area_m2, b.relevance, b.centroid, b.ground, b.major_axis, b.minor_axis};
}

std::string iter_name(int k, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "iter_%04d_%s", k, suffix);
  return buf;
}

}  // namespace

void validate(const RunConfig& cfg) {
  validate(cfg.scenario);
  validate(cfg.hyper);
  validate(cfg.camera);
  validate(cfg.integration);
  validate(cfg.blobs);
  if (cfg.camera.fov != cfg.hyper.fov) throw ConfigError("camera.fov", "must equal swarm.fov");
  if (cfg.iterations < 1) throw ConfigError("run.iterations", "must be >= 1");
  if (!(cfg.d_max > 0.0)) throw ConfigError("run.d_max", "must be > 0");
  if (!(cfg.rx_t > 0.0 && cfg.rx_t < 1.0)) throw ConfigError("rx.t", "must lie in (0, 1)");
  if (!(cfg.iteration_seconds > 0.0)) throw ConfigError("run.iteration_seconds", "must be > 0");
  if (!(cfg.move_epsilon >= 0.0)) throw ConfigError("run.move_epsilon", "must be >= 0");
  if (!(cfg.altitude > cfg.scenario.canopy_height)) throw ConfigError("run.altitude", "must exceed canopy_height");
  if (!(cfg.altitude > cfg.plane.ground_z)) throw ConfigError("run.altitude", "must exceed plane.ground_z");
  const SensorConfig& s = cfg.sensor;
  if (!(s.noise_sigma >= 0.0)) throw ConfigError("sensor.noise_sigma", "must be >= 0");
  if (!(s.pos_sigma >= 0.0)) throw ConfigError("sensor.pos_sigma", "must be >= 0");
  if (!(s.drift_bound >= 0.0)) throw ConfigError("sensor.drift_bound", "must be >= 0");
  if (!(s.drift_step_sigma >= 0.0)) throw ConfigError("sensor.drift_step_sigma", "must be >= 0");
  if (!std::isfinite(s.heading)) throw ConfigError("sensor.heading", "must be finite");
}

Json config_to_json(const RunConfig& c) {
  return Json{
      {"scenario", scenario_to_json(c.scenario)},
      {"swarm", hyper_to_json(c.hyper)},
      {"camera", {{"width", c.camera.width}, {"height", c.camera.height}}},
      {"sensor",
       {{"noise_sigma", c.sensor.noise_sigma},
        {"pos_sigma", c.sensor.pos_sigma},
        {"drift_bound", c.sensor.drift_bound},
        {"drift_step_sigma", c.sensor.drift_step_sigma},
        {"heading", c.sensor.heading}}},
      {"integration",
       {{"n", c.integration.n},
        {"heading_range", c.integration.heading_range},
        {"delta_range", c.integration.delta_range},
        {"theta_range", c.integration.theta_range},
        {"phi_range", c.integration.phi_range},
        {"normalize_by_n", c.integration.normalize_by_n}}},
      {"rx", {{"t", c.rx_t}, {"epsilon", kEpsilonRule}}},
      {"blobs",
       {{"min_area", c.blobs.min_area},
        {"max_area", bound_json(c.blobs.max_area)},
        {"min_axis_ratio", c.blobs.min_axis_ratio},
        {"max_axis_ratio", bound_json(c.blobs.max_axis_ratio)},
        {"v_min", c.blobs.v_min}}},
      {"plane", {{"ground_z", c.plane.ground_z}, {"theta", c.plane.theta}, {"phi", c.plane.phi}}},
      {"run",
       {{"iterations", c.iterations},
        {"seeds", {{"world", c.seeds.world}, {"drift", c.seeds.drift}, {"pso", c.seeds.pso}}},
        {"d_max", c.d_max},
        {"start", vec2_json(c.start)},
        {"altitude", c.altitude},
        {"iteration_seconds", c.iteration_seconds},
        {"move_epsilon", c.move_epsilon}}},
  };
}

RunConfig config_from_json(const Json& doc, const std::filesystem::path& base) {
  reject_unknown_keys(doc,
                      {"scenario", "scenario_file", "swarm", "camera", "sensor", "integration", "rx", "blobs", "plane",
                       "run"},
                      "");
  RunConfig c;
  if (doc.contains("scenario") == doc.contains("scenario_file")) {
    throw ConfigError("scenario", "exactly one of scenario or scenario_file is required");
  }
  if (doc.contains("scenario")) {
    c.scenario = scenario_from_json(doc.at("scenario"));
  } else {
    if (!doc.at("scenario_file").is_string()) throw ConfigError("scenario_file", "expected a path");
    std::filesystem::path p = doc.at("scenario_file").get<std::string>();
    if (p.is_relative()) p = base / p;
    c.scenario = load_scenario(read_file(p));
  }

  c.hyper = hyper_from_json(section(doc, "swarm"));
  c.camera.fov = c.hyper.fov;

  const Json& cam = section(doc, "camera");
  reject_unknown_keys(cam, {"width", "height"}, "camera");
  c.camera.width = read_int_or(cam, "width", c.camera.width, "camera");
  c.camera.height = read_int_or(cam, "height", c.camera.height, "camera");

  const Json& sen = section(doc, "sensor");
  reject_unknown_keys(sen, {"noise_sigma", "pos_sigma", "drift_bound", "drift_step_sigma", "heading"}, "sensor");
  c.sensor.noise_sigma = read_number_or(sen, "noise_sigma", c.sensor.noise_sigma, "sensor");
  c.sensor.pos_sigma = read_number_or(sen, "pos_sigma", c.sensor.pos_sigma, "sensor");
  c.sensor.drift_bound = read_number_or(sen, "drift_bound", c.sensor.drift_bound, "sensor");
  c.sensor.drift_step_sigma = read_number_or(sen, "drift_step_sigma", c.sensor.drift_step_sigma, "sensor");
  c.sensor.heading = read_number_or(sen, "heading", c.sensor.heading, "sensor");

  const Json& ig = section(doc, "integration");
  reject_unknown_keys(ig, {"n", "heading_range", "delta_range", "theta_range", "phi_range", "normalize_by_n"},
                      "integration");
  c.integration.n = read_int_or(ig, "n", c.integration.n, "integration");
  c.integration.heading_range = read_number_or(ig, "heading_range", c.integration.heading_range, "integration");
  c.integration.delta_range = read_number_or(ig, "delta_range", c.integration.delta_range, "integration");
  c.integration.theta_range = read_number_or(ig, "theta_range", c.integration.theta_range, "integration");
  c.integration.phi_range = read_number_or(ig, "phi_range", c.integration.phi_range, "integration");
  c.integration.normalize_by_n = read_bool_or(ig, "normalize_by_n", c.integration.normalize_by_n, "integration");

  const Json& rx = section(doc, "rx");
  reject_unknown_keys(rx, {"t", "epsilon"}, "rx");
  c.rx_t = read_number_or(rx, "t", c.rx_t, "rx");
  if (rx.contains("epsilon") && rx.at("epsilon") != kEpsilonRule) {
    throw ConfigError("rx.epsilon", std::string("only the rule \"") + kEpsilonRule + "\" is supported");
  }

  const Json& bl = section(doc, "blobs");
  reject_unknown_keys(bl, {"min_area", "max_area", "min_axis_ratio", "max_axis_ratio", "v_min"}, "blobs");
  c.blobs.min_area = read_number_or(bl, "min_area", c.blobs.min_area, "blobs");
  c.blobs.max_area = read_bound_or(bl, "max_area", c.blobs.max_area, "blobs");
  c.blobs.min_axis_ratio = read_number_or(bl, "min_axis_ratio", c.blobs.min_axis_ratio, "blobs");
  c.blobs.max_axis_ratio = read_bound_or(bl, "max_axis_ratio", c.blobs.max_axis_ratio, "blobs");
  c.blobs.v_min = read_number_or(bl, "v_min", c.blobs.v_min, "blobs");

  const Json& pl = section(doc, "plane");
  reject_unknown_keys(pl, {"ground_z", "theta", "phi"}, "plane");
  c.plane.ground_z = read_number_or(pl, "ground_z", c.plane.ground_z, "plane");
  c.plane.theta = read_number_or(pl, "theta", c.plane.theta, "plane");
  c.plane.phi = read_number_or(pl, "phi", c.plane.phi, "plane");

  const Json& run = section(doc, "run");
  reject_unknown_keys(run, {"iterations", "seeds", "d_max", "start", "altitude", "iteration_seconds", "move_epsilon"},
                      "run");
  c.iterations = read_int_or(run, "iterations", c.iterations, "run");
  c.seeds = {c.scenario.seed, c.scenario.seed + 1, c.scenario.seed + 2};
  if (run.contains("seeds")) {
    const Json& s = run.at("seeds");
    if (s.is_number_integer()) {
      c.seeds = Seeds::from(read_u64_or(run, "seeds", 0, "run"));
    } else {
      reject_unknown_keys(s, {"world", "drift", "pso"}, "run.seeds");
      c.seeds.world = read_u64_or(s, "world", c.seeds.world, "run.seeds");
      c.seeds.drift = read_u64_or(s, "drift", c.seeds.drift, "run.seeds");
      c.seeds.pso = read_u64_or(s, "pso", c.seeds.pso, "run.seeds");
    }
  }
  c.d_max = read_number_or(run, "d_max", c.d_max, "run");
  if (run.contains("start")) c.start = read_vec2(run, "start", "run");
  c.altitude = read_number_or(run, "altitude", c.altitude, "run");
  c.iteration_seconds = read_number_or(run, "iteration_seconds", c.iteration_seconds, "run");
  c.move_epsilon = read_number_or(run, "move_epsilon", c.move_epsilon, "run");

  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("document", std::string("parse error: ") + e.what());
  }
  try {
    return config_from_json(doc, path.parent_path());
  } catch (const Json::exception& e) {
    throw ConfigError("document", e.what());
  }
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "CORRECT";
    case Verdict::Wrong: return "WRONG";
    case Verdict::None: return "NONE";
  }
  return "NONE";
}

Verdict verdict_from_name(const std::string& name) {
  if (name == "CORRECT") return Verdict::Correct;
  if (name == "WRONG") return Verdict::Wrong;
  if (name == "NONE") return Verdict::None;
  throw Error(ErrorCategory::Replay, "unknown verdict " + name);
}

double distance_to_bbox(Vec2 point, const OrientedBox& bbox) { return bbox.distance_to(point); }

Verdict classify_detection(const std::optional<Vec2>& estimate, const OrientedBox& bbox, double d_max) {
  if (!estimate) return Verdict::None;
  return distance_to_bbox(*estimate, bbox) <= d_max ? Verdict::Correct : Verdict::Wrong;
}

Metrics metrics_from_verdicts(int correct, int wrong, int none) {
  Metrics m;
  m.correct = correct;
  m.wrong = wrong;
  m.none = none;
  if (correct + wrong > 0) m.precision = static_cast<double>(correct) / (correct + wrong);
  if (correct + none > 0) m.recall = static_cast<double>(correct) / (correct + none);
  return m;
}

Metrics metrics(const RunLog& log) {
  int c = 0, w = 0, n = 0;
  double dist = 0.0, conf = 0.0;
  for (const auto& r : log.records) {
    switch (r.verdict) {
      case Verdict::Correct:
        ++c;
        dist += r.distance.value_or(0.0);
        break;
      case Verdict::Wrong: ++w; break;
      case Verdict::None: ++n; break;
    }
    conf += r.confidence;
  }
  Metrics m = metrics_from_verdicts(c, w, n);
  if (c > 0) m.mean_distance = dist / c;
  if (!log.records.empty()) m.mean_confidence = conf / static_cast<double>(log.records.size());
  return m;
}

Json metrics_to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"correct", m.correct},
              {"wrong", m.wrong},
              {"none", m.none},
              {"precision", opt(m.precision)},
              {"recall", opt(m.recall)},
              {"mean_distance", opt(m.mean_distance)},
              {"mean_confidence", opt(m.mean_confidence)}};
}

std::string header_line(const RunConfig& cfg) {
  return Json{{"type", "header"}, {"version", kLogVersion}, {"config", config_to_json(cfg)}}.dump();
}

std::string record_line(const IterationRecord& rec, bool include_wall_clock) {
  return record_json(rec, include_wall_clock).dump();
}

std::string serialize(const RunLog& log, bool include_wall_clock) {
  std::string out = header_line(log.config) + "\n";
  for (const auto& r : log.records) out += record_line(r, include_wall_clock) + "\n";
  return out;
}

RunLog parse_runlog(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) throw Error(ErrorCategory::Replay, "duplicate header");
        if (j.at("version").get<int>() != kLogVersion) throw Error(ErrorCategory::Replay, "unsupported log version");
        log.config = config_from_json(j.at("config"));
        have_header = true;
      } else if (type == "iteration") {
        if (!have_header) throw Error(ErrorCategory::Replay, "record before header");
        log.records.push_back(record_of(j));
      } else {
        throw Error(ErrorCategory::Replay, "unknown record type " + type);
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCategory::Replay, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCategory::Replay, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCategory::Replay, "log has no header");
  return log;
}

RunLog load_runlog(const std::filesystem::path& path) { return parse_runlog(read_file(path)); }

Runner::Runner(RunConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  Scenario sc = cfg_.scenario;
  sc.seed = cfg_.seeds.world;
  world_ = make_world(sc);
  swarm_ = initial_state(cfg_.hyper, cfg_.start, cfg_.altitude);
  drift_.assign(static_cast<std::size_t>(cfg_.hyper.N),
                DriftState{0.0, cfg_.sensor.drift_bound, cfg_.sensor.drift_step_sigma});
}

void Runner::set_guide(Vec2 guide) {
  swarm_.guide = guide;
  swarm_.release_pending = false;
}

void Runner::release() {
  if (swarm_.guide) swarm_.release_pending = true;
}

void Runner::set_hyperparameters(const Hyperparameters& hyper) {
  if (hyper.N != cfg_.hyper.N) throw Error(ErrorCategory::InvalidArgument, "N cannot change during a run");
  if (hyper.fov != cfg_.hyper.fov) throw Error(ErrorCategory::InvalidArgument, "fov cannot change during a run");
  validate(hyper);
  cfg_.hyper = hyper;
}

IterationRecord Runner::step(IterationArtifacts* artifacts) {
  if (done()) throw Error(ErrorCategory::InvalidArgument, "run already complete");
  const auto t0 = std::chrono::steady_clock::now();
  const int k = k_;
  try {
    const std::uint64_t pso_seed = derive_seed({cfg_.seeds.pso, static_cast<std::uint64_t>(k)});
    if (swarm_.guide) {
      swarm_ = guided_follow(swarm_, *swarm_.guide, cfg_.move_epsilon, last_obs_.value_or(Observation{}), cfg_.hyper,
                             pso_seed);
    } else if (k > 0) {
      swarm_ = pso_step(swarm_, *last_obs_, cfg_.hyper, pso_seed);
    }
    if (swarm_.release_pending) {
      swarm_.guide.reset();
      swarm_.last_guide.reset();
      swarm_.release_pending = false;
    }

    IterationRecord rec;
    rec.iteration = k;
    rec.time = k * cfg_.iteration_seconds;
    rec.branch = swarm_.last_branch;
    rec.mode = swarm_.mode;

    const int n = swarm_.size();
    std::vector<Pose> reported(static_cast<std::size_t>(n));
    std::vector<Image> frames;
    std::vector<AnomalyMask> masks;
    frames.reserve(static_cast<std::size_t>(n));
    masks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::uint64_t>(i);
      const auto uk = static_cast<std::uint64_t>(k);
      drift_[ui] = advance_drift(drift_[ui], derive_seed({cfg_.seeds.drift, ui}), uk);
      const Pose truth{{swarm_.positions[ui].x, swarm_.positions[ui].y, swarm_.altitudes[ui]}, cfg_.sensor.heading};
      reported[ui] = reported_pose(truth, drift_[ui], cfg_.sensor.pos_sigma, derive_seed({cfg_.seeds.drift, ui, uk, 0x9051}));
      Frame f = render_frame(world_, truth, cfg_.camera, rec.time, cfg_.sensor.noise_sigma,
                             derive_seed({cfg_.seeds.world, uk, ui}));
      masks.push_back(detect_anomalies(f.pixels, cfg_.rx_t));
      frames.push_back(std::move(f.pixels));
      rec.drones.push_back({truth, reported[ui], drift_[ui].heading_error});
    }

    Observation obs = multi_reference_evaluate(masks, reported, cfg_.camera, cfg_.plane, cfg_.integration, cfg_.blobs);
    rec.confidence = obs.confidence;
    rec.reference = obs.reference;
    rec.reference_confidences = obs.reference_confidences;
    for (const Blob& b : obs.blobs) rec.blobs.push_back(blob_record(b));
    if (obs.best_blob && obs.confidence > cfg_.hyper.T) rec.estimate = obs.best_blob->ground;

    const TargetState gt = target_state(cfg_.scenario.target, rec.time);
    rec.gt_center = gt.center;
    rec.gt_bbox = gt.bbox;
    rec.verdict = classify_detection(rec.estimate, gt.bbox, cfg_.d_max);
    if (rec.estimate) rec.distance = distance_to_bbox(*rec.estimate, gt.bbox);

    if (artifacts) {
      artifacts->signal = signal_integral(frames, reported, cfg_.camera, obs.integral.plane, obs.integral.vcam);
      artifacts->anomaly = obs.integral;
    }
    last_obs_ = std::move(obs);
    ++k_;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  } catch (const Error& e) {
    throw Error(e.category(), "iteration " + std::to_string(k) + ": " + e.what());
  }
}

RunLog run(const RunConfig& cfg, bool keep_artifacts) {
  RunLog log;
  log.config = cfg;
  Runner runner(cfg);
  while (!runner.done()) {
    IterationArtifacts art;
    log.records.push_back(runner.step(keep_artifacts ? &art : nullptr));
    if (keep_artifacts) log.artifacts.push_back(std::move(art));
  }
  return log;
}

RunLog replay(const RunLog& log) {
  RunLog again = run(log.config);
  if (again.records.size() != log.records.size()) {
    throw Error(ErrorCategory::Replay, "record count differs: " + std::to_string(log.records.size()) + " logged, " +
                                           std::to_string(again.records.size()) + " replayed");
  }
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    if (record_line(log.records[i], false) != record_line(again.records[i], false)) {
      throw Error(ErrorCategory::Replay, "iteration " + std::to_string(log.records[i].iteration) + " differs on replay");
    }
  }
  return again;
}

std::vector<std::filesystem::path> export_run(const RunLog& log, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& bytes) {
    const auto p = dir / name;
    write_file(p, bytes);
    written.push_back(p);
  };

  put("runlog.jsonl", serialize(log));

  for (std::size_t i = 0; i < log.artifacts.size() && i < log.records.size(); ++i) {
    const int k = log.records[i].iteration;
    const IterationArtifacts& a = log.artifacts[i];
    put(iter_name(k, "anomaly.pgm"), encode_pnm(a.anomaly.values));
    put(iter_name(k, a.signal.values.channels == 3 ? "integral.ppm" : "integral.pgm"), encode_pnm(a.signal.values));
    const VirtualCamera& v = a.anomaly.vcam;
    const Json meta{
        {"iter", k},
        {"plane", {{"delta", a.anomaly.plane.delta}, {"theta", a.anomaly.plane.theta}, {"phi", a.anomaly.plane.phi}}},
        {"vcam",
         {{"position", {v.position.x, v.position.y, v.position.z}},
          {"heading", v.heading},
          {"fov", v.fov},
          {"width", v.width},
          {"height", v.height}}},
        {"integration", config_to_json(log.config)["integration"]},
        {"drones", a.anomaly.drone_count},
        {"layers", a.anomaly.integrations},
        {"reference", log.records[i].reference}};
    put(iter_name(k, "anomaly.json"), meta.dump(2) + "\n");
  }

  std::ostringstream blobs;
  blobs << "iter,rank,area_px,area_m2,relevance,s,t,x,y,major_m,minor_m,min_x,min_y,max_x,max_y\n";
  blobs.precision(17);
  for (const auto& r : log.records) {
    for (std::size_t j = 0; j < r.blobs.size(); ++j) {
      const BlobRecord& b = r.blobs[j];
      blobs << r.iteration << ',' << j << ',' << b.area << ',' << b.area_m2 << ',' << b.relevance << ','
            << b.centroid.col << ',' << b.centroid.row << ',' << b.ground.x << ',' << b.ground.y << ','
            << b.major_axis << ',' << b.minor_axis << ',' << b.bbox.min_x << ',' << b.bbox.min_y << ','
            << b.bbox.max_x << ',' << b.bbox.max_y << '\n';
    }
  }
  put("blobs.csv", blobs.str());

  // Rows: iteration index, confidence, threshold; one column per iteration.
  std::ostringstream series;
  series.precision(17);
  for (int row = 0; row < 3; ++row) {
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      if (i) series << ',';
      const auto& r = log.records[i];
      if (row == 0) series << r.iteration;
      if (row == 1) series << r.confidence;
      if (row == 2) series << log.config.hyper.T;
    }
    series << '\n';
  }
  put("confidence_series.csv", series.str());

  put("metrics.json", metrics_to_json(metrics(log)).dump(2) + "\n");
  return written;
}

}  // namespace swarmsense
