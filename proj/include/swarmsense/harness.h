#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmsense/json_io.h"
#include "swarmsense/objective.h"
#include "swarmsense/pnm.h"
#include "swarmsense/scenario.h"
#include "swarmsense/sensor.h"
#include "swarmsense/swarm.h"

namespace swarmsense {

struct SensorConfig {
  double noise_sigma = 0.02;
  double pos_sigma = 0.02;  // m
  double drift_bound = 5.0;  // degrees
  double drift_step_sigma = 0.5;  // degrees per iteration
  double heading = 0.0;  // true heading of every drone, degrees

  bool operator==(const SensorConfig&) const = default;
};

struct Seeds {
  std::uint64_t world = 1;  // forest layout and frame noise
  std::uint64_t drift = 2;
  std::uint64_t pso = 3;

  static Seeds from(std::uint64_t k) { return {k, k + 1, k + 2}; }
  bool operator==(const Seeds&) const = default;
};

struct RunConfig {
  Scenario scenario;
  Hyperparameters hyper;
  CameraModel camera;  // fov mirrors hyper.fov
  SensorConfig sensor;
  IntegrationConfig integration;
  double rx_t = 0.9975;
  BlobConstraints blobs;
  PlaneTemplate plane;
  int iterations = 50;
  Seeds seeds;
  double d_max = 3.0;  // m
  Vec2 start{50.0, 50.0};
  double altitude = 35.0;  // base altitude of the lowest drone, m
  double iteration_seconds = 1.0;
  double move_epsilon = 0.1;  // m

  bool operator==(const RunConfig&) const = default;
};

// Throws ConfigError or Error(InvalidArgument) naming the offending field.
void validate(const RunConfig& cfg);

Json config_to_json(const RunConfig& cfg);
// `base` resolves a relative "scenario_file" reference.
RunConfig config_from_json(const Json& doc, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& path);

enum class Verdict { Correct, Wrong, None };

const char* verdict_name(Verdict v);
Verdict verdict_from_name(const std::string& name);

double distance_to_bbox(Vec2 point, const OrientedBox& bbox);
Verdict classify_detection(const std::optional<Vec2>& estimate, const OrientedBox& bbox, double d_max);

struct BlobRecord {
  PixelBox bbox;
  int area = 0;
  double area_m2 = 0.0;
  double relevance = 0.0;
  PixelCoord centroid;
  Vec2 ground;
  double major_axis = 0.0;
  double minor_axis = 0.0;

  bool operator==(const BlobRecord&) const = default;
};

struct DroneRecord {
  Pose pose_true;
  Pose pose_reported;
  double heading_error = 0.0;

  bool operator==(const DroneRecord&) const = default;
};

struct IterationRecord {
  int iteration = 0;
  double time = 0.0;
  Branch branch = Branch::Initial;  // how this iteration's constellation was reached
  SwarmMode mode = SwarmMode::Scanning;
  std::vector<DroneRecord> drones;
  double confidence = 0.0;
  int reference = 0;
  std::vector<double> reference_confidences;
  std::vector<BlobRecord> blobs;  // descending relevance; the first is the best blob
  Verdict verdict = Verdict::None;
  std::optional<Vec2> estimate;
  Vec2 gt_center;
  OrientedBox gt_bbox;
  std::optional<double> distance;
  double wall_ms = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

// Images kept in memory for export and the live console; not serialized.
struct IterationArtifacts {
  IntegralImage anomaly;
  IntegralImage signal;
};

struct RunLog {
  RunConfig config;
  std::vector<IterationRecord> records;
  std::vector<IterationArtifacts> artifacts;  // empty after parsing
};

struct Metrics {
  int correct = 0;
  int wrong = 0;
  int none = 0;
  std::optional<double> precision;  // undefined for an empty denominator
  std::optional<double> recall;
  std::optional<double> mean_distance;
  std::optional<double> mean_confidence;

  bool operator==(const Metrics&) const = default;
};

Metrics metrics_from_verdicts(int correct, int wrong, int none);
Metrics metrics(const RunLog& log);
Json metrics_to_json(const Metrics& m);

// Line-delimited JSON: one header record followed by one record per iteration.
std::string header_line(const RunConfig& cfg);
std::string record_line(const IterationRecord& rec, bool include_wall_clock = true);
std::string serialize(const RunLog& log, bool include_wall_clock = true);
RunLog parse_runlog(const std::string& text);
RunLog load_runlog(const std::filesystem::path& path);

// Closed-loop simulation stepped one iteration at a time.
class Runner {
 public:
  explicit Runner(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const SwarmState& swarm() const { return swarm_; }
  int iteration() const { return k_; }
  bool done() const { return k_ >= cfg_.iterations; }

  // Commands; they take effect when the next iteration positions the swarm.
  void set_guide(Vec2 guide);
  void release();
  // Throws Error(InvalidArgument) and leaves the runner unchanged if invalid.
  void set_hyperparameters(const Hyperparameters& hyper);

  IterationRecord step(IterationArtifacts* artifacts = nullptr);

  const std::optional<Observation>& last_observation() const { return last_obs_; }

 private:
  RunConfig cfg_;
  World world_;
  SwarmState swarm_;
  std::vector<DriftState> drift_;
  std::optional<Observation> last_obs_;
  int k_ = 0;
};

RunLog run(const RunConfig& cfg, bool keep_artifacts = false);

// Reruns the log's configuration; throws Error(Replay) on the first differing record.
RunLog replay(const RunLog& log);

// Writes runlog.jsonl, per-iteration images and sidecars, blobs.csv,
// confidence_series.csv and metrics.json. Returns the written paths.
std::vector<std::filesystem::path> export_run(const RunLog& log, const std::filesystem::path& dir);

}  // namespace swarmsense
