#include "swarmsense/camera.h"

#include <cmath>

#include "swarmsense/error.h"

namespace swarmsense {

double CameraModel::half_extent() const { return std::tan(deg_to_rad(fov) * 0.5); }

void validate(const CameraModel& camera) {
  if (!(camera.fov > 0.0 && camera.fov < 180.0)) throw ConfigError("fov", "must lie in (0, 180) degrees");
  if (camera.width < 16 || camera.height < 16) throw ConfigError("resolution", "must be at least 16x16");
}

CameraAxes camera_axes(double heading_deg) {
  const Vec2 f = heading_vector(heading_deg);
  return {{f.y, -f.x}, f};
}

Normalized pixel_to_normalized(const CameraModel& camera, double col, double row) {
  const double k = 2.0 * camera.half_extent();
  return {((col + 0.5) / camera.width - 0.5) * k, ((row + 0.5) / camera.height - 0.5) * k};
}

PixelCoord normalized_to_pixel(const CameraModel& camera, Normalized n) {
  const double k = 2.0 * camera.half_extent();
  return {(n.x / k + 0.5) * camera.width - 0.5, (n.y / k + 0.5) * camera.height - 0.5};
}

Vec3 pixel_ray(const CameraModel& camera, const Pose& pose, double col, double row) {
  const Normalized n = pixel_to_normalized(camera, col, row);
  const CameraAxes axes = camera_axes(pose.heading);
  const Vec2 g = axes.right * n.x - axes.forward * n.y;
  return {g.x, g.y, -1.0};
}

std::optional<PixelCoord> project_point(const CameraModel& camera, const Pose& pose, Vec3 point) {
  const Vec3 q = point - pose.position;
  const double depth = -q.z;
  if (!(depth > 0.0)) return std::nullopt;
  const CameraAxes axes = camera_axes(pose.heading);
  const Vec2 g = q.xy();
  return normalized_to_pixel(camera, {g.dot(axes.right) / depth, -g.dot(axes.forward) / depth});
}

double footprint_width(const CameraModel& camera, double distance) { return 2.0 * distance * camera.half_extent(); }

}  // namespace swarmsense
