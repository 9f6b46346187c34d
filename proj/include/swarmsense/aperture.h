#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swarmsense/camera.h"
#include "swarmsense/raster.h"
#include "swarmsense/rx.h"

namespace swarmsense {

// Synthetic focal plane relative to the virtual camera: it crosses the optical
// axis `delta` metres below the camera; its normal is the vertical tilted by
// theta about the camera's right axis and then by phi about its forward axis.
struct FocalPlane {
  double delta = 1.0;
  double theta = 0.0;  // degrees
  double phi = 0.0;    // degrees

  bool operator==(const FocalPlane&) const = default;
};

struct VirtualCamera {
  Vec3 position;
  double heading = 0.0;  // degrees; integral images are north-up at 0
  double fov = 43.0;
  int width = 128;
  int height = 128;

  CameraModel model() const { return {fov, width, height}; }
  Pose pose() const { return {position, heading}; }
  bool operator==(const VirtualCamera&) const = default;
};

// Virtual camera co-located with a drone, north-up, same optics.
VirtualCamera virtual_camera_at(const Pose& reference, const CameraModel& camera);

struct IntegrationConfig {
  int n = 1;                   // steps per unknown parameter
  double heading_range = 0.0;  // +- degrees
  double delta_range = 0.0;    // +- metres
  double theta_range = 0.0;    // +- degrees
  double phi_range = 0.0;      // +- degrees
  // When false the result is scaled by n (copy counts instead of fractions);
  // diagnostic use only, values may then exceed 1.
  bool normalize_by_n = true;

  bool operator==(const IntegrationConfig&) const = default;
};

void validate(const IntegrationConfig& cfg);

// n uniform offsets covering [-range, range): -range + k * 2 range / n.
std::vector<double> offset_steps(int n, double range);

// One registered raster on the focal plane. Absent samples fell outside the
// source frustum and do not take part in averaging.
struct Layer {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> values;  // channels per pixel
  std::vector<std::uint8_t> present;
};

// Focal-plane raster. For anomaly integrals a value v from N drones with n=1
// means round(v N) of them flagged that focal-plane point. With n>1 the value
// is the fraction of transformed copies and only approximates visibility.
struct IntegralImage {
  Image values;
  FocalPlane plane;
  VirtualCamera vcam;
  int drone_count = 0;
  int integrations = 0;  // transformed rasters folded into the average

  // Focal-plane pixel pitch (m) at the optical axis.
  double pixel_pitch() const;
};

// Maps virtual camera pixels to a drone's pixels through the focal plane.
class PlaneRegistration {
 public:
  PlaneRegistration(const VirtualCamera& vcam, const FocalPlane& plane, const Pose& drone_pose,
                    const CameraModel& camera);

  // Source pixel for a virtual-camera pixel center; false when the plane point
  // is behind either camera.
  bool map(int col, int row, PixelCoord& out) const;

 private:
  double h_[9];     // homogeneous map from (col,row,1) to source (col,row,w)
  double den_[3];   // ray/plane denominator as a linear form of (col,row,1)
  double t_sign_ = 1.0;
};

// World point where the virtual-camera ray through (col,row) meets the plane.
// Throws Error(Projection) for a ray parallel to the plane.
Vec3 plane_point(const VirtualCamera& vcam, const FocalPlane& plane, double col, double row);

// Nearest-neighbour registration of a binary mask.
Layer project_layer(const AnomalyMask& mask, const Pose& reported_pose, const CameraModel& camera,
                    const FocalPlane& plane, const VirtualCamera& vcam, double heading_offset = 0.0);

// Bilinear registration of a signal frame.
Layer project_layer(const Image& frame, const Pose& reported_pose, const CameraModel& camera,
                    const FocalPlane& plane, const VirtualCamera& vcam, double heading_offset = 0.0);

// Per-pixel mean of present samples; 0 where nothing is present.
IntegralImage integrate(std::span<const Layer> layers, const FocalPlane& plane, const VirtualCamera& vcam);

// Folds unknown headings (per drone) and plane parameters (shared) into one
// anomaly integral using (N + 3) n transformed rasters.
IntegralImage parameter_integrate(std::span<const AnomalyMask> masks, std::span<const Pose> reported_poses,
                                  const CameraModel& camera, const FocalPlane& nominal_plane,
                                  const VirtualCamera& vcam, const IntegrationConfig& cfg);

IntegralImage signal_integral(std::span<const Image> frames, std::span<const Pose> reported_poses,
                              const CameraModel& camera, const FocalPlane& plane, const VirtualCamera& vcam);

// Throws unless the plane is admissible; checks every virtual-camera ray.
void check_plane(const VirtualCamera& vcam, const FocalPlane& plane);

}  // namespace swarmsense
