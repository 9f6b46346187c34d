#pragma once

#include <optional>

#include "swarmsense/geometry.h"

namespace swarmsense {

struct Pose {
  Vec3 position;        // z is altitude above ground level
  double heading = 0.0;  // degrees clockwise from north

  bool operator==(const Pose&) const = default;
};

// Nadir pinhole camera with a square frustum.
struct CameraModel {
  double fov = 43.0;  // degrees
  int width = 128;
  int height = 128;

  double half_extent() const;  // tan(fov/2)
  bool operator==(const CameraModel&) const = default;
};

void validate(const CameraModel& camera);

// Camera-frame axes on the ground: `right` is image +column, `forward` is image -row.
struct CameraAxes {
  Vec2 right;
  Vec2 forward;
};

CameraAxes camera_axes(double heading_deg);

// Normalized image coordinates (x right, y down) of a continuous pixel position
// where pixel centers sit at integer coordinates.
struct Normalized {
  double x = 0.0;
  double y = 0.0;
};

Normalized pixel_to_normalized(const CameraModel& camera, double col, double row);

struct PixelCoord {
  double col = 0.0;
  double row = 0.0;
  bool operator==(const PixelCoord&) const = default;
};

PixelCoord normalized_to_pixel(const CameraModel& camera, Normalized n);

// World direction of the ray through a continuous pixel (z component is -1).
Vec3 pixel_ray(const CameraModel& camera, const Pose& pose, double col, double row);

// Continuous pixel coordinate of a world point, or nullopt if it lies behind
// the camera. Does not check the image bounds.
std::optional<PixelCoord> project_point(const CameraModel& camera, const Pose& pose, Vec3 point);

// Ground footprint width (m) of the frame at altitude z above a plane at height h.
double footprint_width(const CameraModel& camera, double distance);

}  // namespace swarmsense
