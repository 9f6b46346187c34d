#pragma once

#include <cstdint>

#include "swarmsense/camera.h"
#include "swarmsense/raster.h"
#include "swarmsense/scenario.h"

namespace swarmsense {

struct Frame {
  Image pixels;  // values in [0,1], 1 or 3 channels
  Pose pose_reported;
  Pose pose_true;  // oracle tests only
  double timestamp = 0.0;
};

// Compass heading error random walk, clamped to +-bound.
struct DriftState {
  double heading_error = 0.0;
  double bound = 5.0;
  double step_sigma = 0.5;

  bool operator==(const DriftState&) const = default;
};

// One ray per pixel through the crown disks to the ground plane.
// pose_reported is initialised to pose_true.
Frame render_frame(const World& world, const Pose& pose_true, const CameraModel& camera, double time,
                   double noise_sigma, std::uint64_t seed);

DriftState advance_drift(const DriftState& state, std::uint64_t seed, std::uint64_t iteration);

Pose reported_pose(const Pose& pose_true, const DriftState& drift, double pos_sigma, std::uint64_t seed);

}  // namespace swarmsense
