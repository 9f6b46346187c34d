#include "swarmsense/scenario.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include "swarmsense/error.h"
#include "swarmsense/json_io.h"
#include "swarmsense/random.h"

namespace swarmsense {

int channel_count(SignalKind kind) { return kind == SignalKind::Color ? 3 : 1; }

namespace {

// Heading of segment i, or nullopt for a zero-length segment.
std::optional<Vec2> segment_axis(const TargetTrack& track, std::size_t i) {
  const Vec2 d = track.waypoints[i + 1].position - track.waypoints[i].position;
  if (d.norm() < 1e-12) return std::nullopt;
  return unit_or_zero(d);
}

// Last non-degenerate heading at or before segment i; falls forward when the
// track starts stationary, and east when it never moves.
Vec2 heading_at_segment(const TargetTrack& track, std::size_t seg) {
  for (std::size_t i = seg + 1; i-- > 0;) {
    if (auto a = segment_axis(track, i)) return *a;
  }
  for (std::size_t i = seg + 1; i + 1 < track.waypoints.size(); ++i) {
    if (auto a = segment_axis(track, i)) return *a;
  }
  return {1.0, 0.0};
}

}  // namespace

TargetState target_state(const TargetTrack& track, double time) {
  const auto& wp = track.waypoints;
  TargetState out;
  out.bbox.length = track.length;
  out.bbox.width = track.width;
  if (wp.empty()) return out;
  if (wp.size() == 1) {
    out.center = wp.front().position;
    out.bbox.center = out.center;
    return out;
  }
  std::size_t seg = 0;
  if (time <= wp.front().time) {
    out.center = wp.front().position;
    seg = 0;
  } else if (time >= wp.back().time) {
    out.center = wp.back().position;
    seg = wp.size() - 2;
  } else {
    seg = static_cast<std::size_t>(
              std::upper_bound(wp.begin(), wp.end(), time,
                               [](double t, const Waypoint& w) { return t < w.time; }) -
              wp.begin()) -
          1;
    const Waypoint& a = wp[seg];
    const Waypoint& b = wp[seg + 1];
    const double u = (time - a.time) / (b.time - a.time);
    out.center = a.position + (b.position - a.position) * u;
  }
  out.bbox.center = out.center;
  out.bbox.axis = heading_at_segment(track, seg);
  return out;
}

double max_segment_speed(const TargetTrack& track) {
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < track.waypoints.size(); ++i) {
    const auto& a = track.waypoints[i];
    const auto& b = track.waypoints[i + 1];
    v = std::max(v, (b.position - a.position).norm() / (b.time - a.time));
  }
  return v;
}

OccluderSet::OccluderSet(std::vector<Occluder> occluders, Rect bounds)
    : items_(std::move(occluders)), bounds_(bounds) {
  rebuild();
}

void OccluderSet::add(const Occluder& occluder) {
  items_.push_back(occluder);
  rebuild();
}

void OccluderSet::rebuild() {
  double max_r = 0.0;
  heights_.clear();
  Rect box = bounds_;
  for (const auto& o : items_) {
    max_r = std::max(max_r, o.radius);
    heights_.push_back(o.height);
    box.min_x = std::min(box.min_x, o.center.x);
    box.min_y = std::min(box.min_y, o.center.y);
    box.max_x = std::max(box.max_x, o.center.x);
    box.max_y = std::max(box.max_y, o.center.y);
  }
  box.min_x -= max_r;
  box.min_y -= max_r;
  box.max_x += max_r;
  box.max_y += max_r;
  std::sort(heights_.begin(), heights_.end(), std::greater<>());
  heights_.erase(std::unique(heights_.begin(), heights_.end()), heights_.end());
  grid_ = box;
  cell_ = std::max(2.0 * max_r, 0.5);
  nx_ = std::max(1, static_cast<int>(std::ceil(grid_.width() / cell_)) + 1);
  ny_ = std::max(1, static_cast<int>(std::ceil(grid_.height() / cell_)) + 1);
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int i = 0; i < static_cast<int>(items_.size()); ++i) {
    const Occluder& o = items_[i];
    const int x0 = static_cast<int>(std::floor((o.center.x - o.radius - grid_.min_x) / cell_));
    const int x1 = static_cast<int>(std::floor((o.center.x + o.radius - grid_.min_x) / cell_));
    const int y0 = static_cast<int>(std::floor((o.center.y - o.radius - grid_.min_y) / cell_));
    const int y1 = static_cast<int>(std::floor((o.center.y + o.radius - grid_.min_y) / cell_));
    for (int y = std::max(0, y0); y <= std::min(ny_ - 1, y1); ++y) {
      for (int x = std::max(0, x0); x <= std::min(nx_ - 1, x1); ++x) {
        buckets_[static_cast<std::size_t>(y) * nx_ + x].push_back(i);
      }
    }
  }
}

const std::vector<int>* OccluderSet::bucket(Vec2 p) const {
  const int x = static_cast<int>(std::floor((p.x - grid_.min_x) / cell_));
  const int y = static_cast<int>(std::floor((p.y - grid_.min_y) / cell_));
  if (x < 0 || y < 0 || x >= nx_ || y >= ny_) return nullptr;
  return &buckets_[static_cast<std::size_t>(y) * nx_ + x];
}

int OccluderSet::first_hit(Vec3 origin, Vec3 dir) const {
  if (items_.empty() || dir.z >= 0.0) return -1;
  for (double h : heights_) {
    if (h >= origin.z) continue;
    const double s = (h - origin.z) / dir.z;
    const Vec2 p{origin.x + s * dir.x, origin.y + s * dir.y};
    const auto* cell = bucket(p);
    if (cell == nullptr) continue;
    for (int idx : *cell) {
      const Occluder& o = items_[idx];
      if (o.height != h) continue;
      const Vec2 d = p - o.center;
      if (d.dot(d) <= o.radius * o.radius) return idx;
    }
  }
  return -1;
}

void validate(const Scenario& sc) {
  if (!(sc.bounds.max_x > sc.bounds.min_x) || !(sc.bounds.max_y > sc.bounds.min_y)) {
    throw ConfigError("bounds", "rectangle must have positive width and height");
  }
  if (!(sc.forest_density >= 0.0) || !std::isfinite(sc.forest_density)) {
    throw ConfigError("forest_density", "must be a finite value >= 0");
  }
  if (!(sc.canopy_height > 0.0)) throw ConfigError("canopy_height", "must be > 0");
  if (!(sc.crown_radius_min > 0.0) || !(sc.crown_radius_min <= sc.crown_radius_max)) {
    throw ConfigError("crown_radius_range", "requires 0 < min <= max");
  }
  const auto& wp = sc.target.waypoints;
  if (wp.empty()) throw ConfigError("target.waypoints", "at least one waypoint required");
  for (std::size_t i = 1; i < wp.size(); ++i) {
    if (!(wp[i].time > wp[i - 1].time)) throw ConfigError("target.waypoints", "times must be strictly increasing");
  }
  if (!(sc.target.length > 0.0) || !(sc.target.width > 0.0)) {
    throw ConfigError("target.bbox_size", "length and width must be > 0");
  }
  const std::size_t ch = static_cast<std::size_t>(sc.channels());
  const auto check_signal = [ch](const SignalDescriptor& s, const char* key) {
    if (s.mean.size() != ch) throw ConfigError(key, "mean must have one entry per channel");
    for (double m : s.mean) {
      if (!(m >= 0.0 && m <= 1.0)) throw ConfigError(key, "mean values must lie in [0,1]");
    }
    if (!(s.sigma >= 0.0)) throw ConfigError(key, "sigma must be >= 0");
  };
  check_signal(sc.background_signal, "background_signal");
  check_signal(sc.occluder_signal, "occluder_signal");
  check_signal(sc.target_signal, "target_signal");
}

OccluderSet generate_forest(double density, const Rect& bounds, double radius_min, double radius_max,
                            double canopy_height, std::uint64_t seed) {
  if (!(density >= 0.0)) throw ConfigError("forest_density", "must be >= 0");
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw ConfigError("bounds", "rectangle must have positive width and height");
  }
  const auto count = static_cast<std::size_t>(std::llround(density * bounds.area() / 10000.0));
  Rng rng = make_rng({seed, 0xf0de57ULL});
  std::vector<Occluder> trees;
  trees.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Occluder o;
    o.center.x = uniform(rng, bounds.min_x, bounds.max_x);
    o.center.y = uniform(rng, bounds.min_y, bounds.max_y);
    o.radius = uniform(rng, radius_min, radius_max);
    o.height = canopy_height;
    trees.push_back(o);
  }
  return OccluderSet(std::move(trees), bounds);
}

OccluderSet generate_forest(const Scenario& sc) {
  return generate_forest(sc.forest_density, sc.bounds, sc.crown_radius_min, sc.crown_radius_max, sc.canopy_height,
                         sc.seed);
}

World make_world(const Scenario& scenario) {
  validate(scenario);
  return World{scenario, generate_forest(scenario)};
}

Scenario load_scenario(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("document", std::string("parse error: ") + e.what());
  }
  return scenario_from_json(doc);
}

std::string save_scenario(const Scenario& scenario) { return scenario_to_json(scenario).dump(2) + "\n"; }

}  // namespace swarmsense
