#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swarmsense/geometry.h"

namespace swarmsense {

enum class SignalKind { Color, Thermal };

int channel_count(SignalKind kind);

// Per-pixel intensity model: mean tuple plus isotropic Gaussian texture.
struct SignalDescriptor {
  std::vector<double> mean;
  double sigma = 0.0;

  bool operator==(const SignalDescriptor&) const = default;
};

struct Waypoint {
  double time = 0.0;
  Vec2 position;

  bool operator==(const Waypoint&) const = default;
};

struct TargetTrack {
  std::vector<Waypoint> waypoints;
  double length = 1.25;  // bbox extent along the motion heading
  double width = 1.25;
  SignalKind kind = SignalKind::Thermal;

  bool operator==(const TargetTrack&) const = default;
};

struct TargetState {
  Vec2 center;
  OrientedBox bbox;
};

// Piecewise-linear center; bbox aligned with the current segment heading.
// Times outside the track are clamped to its ends.
TargetState target_state(const TargetTrack& track, double time);

// Largest segment speed (m/s) of the track, 0 for a single waypoint.
double max_segment_speed(const TargetTrack& track);

struct Occluder {
  Vec2 center;
  double radius = 0.0;
  double height = 0.0;

  bool operator==(const Occluder&) const = default;
};

// Tree crowns with a uniform bucket grid for ray queries.
class OccluderSet {
 public:
  OccluderSet() = default;
  OccluderSet(std::vector<Occluder> occluders, Rect bounds);

  const std::vector<Occluder>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  // Highest crown disk covering ground point p at its own height, traced
  // along a downward ray origin + s*dir (dir.z < 0). Returns the index of
  // the first occluder hit or -1.
  int first_hit(Vec3 origin, Vec3 dir) const;

  void add(const Occluder& occluder);

 private:
  void rebuild();
  const std::vector<int>* bucket(Vec2 p) const;

  std::vector<Occluder> items_;
  Rect bounds_;
  Rect grid_;  // bounds grown to cover every crown
  double cell_ = 1.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::vector<int>> buckets_;
  std::vector<double> heights_;  // distinct crown heights, descending
};

struct Scenario {
  Rect bounds{0.0, 0.0, 100.0, 100.0};
  double forest_density = 0.0;  // trees per hectare
  double canopy_height = 15.0;
  double crown_radius_min = 1.5;
  double crown_radius_max = 2.5;
  TargetTrack target;
  SignalDescriptor background_signal{{0.30}, 0.03};
  SignalDescriptor occluder_signal{{0.50}, 0.03};
  SignalDescriptor target_signal{{0.90}, 0.02};
  std::uint64_t seed = 1;

  int channels() const { return channel_count(target.kind); }
  bool operator==(const Scenario&) const = default;
};

// Throws ConfigError naming the offending field.
void validate(const Scenario& scenario);

// Exactly round(density * area_ha) crowns, uniform centers and radii.
OccluderSet generate_forest(double density, const Rect& bounds, double radius_min, double radius_max,
                            double canopy_height, std::uint64_t seed);

OccluderSet generate_forest(const Scenario& scenario);

struct World {
  Scenario scenario;
  OccluderSet forest;
};

World make_world(const Scenario& scenario);

Scenario load_scenario(const std::string& text);
std::string save_scenario(const Scenario& scenario);

}  // namespace swarmsense
