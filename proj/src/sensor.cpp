#include "swarmsense/sensor.h"

#include <algorithm>

#include "swarmsense/error.h"
#include "swarmsense/random.h"

namespace swarmsense {

Frame render_frame(const World& world, const Pose& pose_true, const CameraModel& camera, double time,
                   double noise_sigma, std::uint64_t seed) {
  validate(camera);
  const Scenario& sc = world.scenario;
  if (!(pose_true.position.z > sc.canopy_height)) {
    throw Error(ErrorCategory::InvalidPose, "camera altitude " + std::to_string(pose_true.position.z) +
                                                " m is not above the canopy (" + std::to_string(sc.canopy_height) + " m)");
  }
  const int ch = sc.channels();
  Frame frame;
  frame.pixels = Image(camera.width, camera.height, ch);
  frame.pose_true = pose_true;
  frame.pose_reported = pose_true;
  frame.timestamp = time;

  const TargetState target = target_state(sc.target, time);
  Rng rng = make_rng({seed, 0x7e4dULL});
  const Vec3 origin = pose_true.position;
  for (int row = 0; row < camera.height; ++row) {
    for (int col = 0; col < camera.width; ++col) {
      const Vec3 dir = pixel_ray(camera, pose_true, col, row);
      const SignalDescriptor* signal = &sc.background_signal;
      if (world.forest.first_hit(origin, dir) >= 0) {
        signal = &sc.occluder_signal;
      } else {
        const Vec2 ground{origin.x + origin.z * dir.x, origin.y + origin.z * dir.y};
        if (target.bbox.contains(ground)) signal = &sc.target_signal;
      }
      for (int c = 0; c < ch; ++c) {
        double v = signal->mean[c] + normal(rng, signal->sigma) + normal(rng, noise_sigma);
        frame.pixels.at(col, row, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return frame;
}

DriftState advance_drift(const DriftState& state, std::uint64_t seed, std::uint64_t iteration) {
  DriftState next = state;
  Rng rng = make_rng({seed, iteration, 0xd41f7ULL});
  next.heading_error = std::clamp(state.heading_error + normal(rng, state.step_sigma), -state.bound, state.bound);
  return next;
}

Pose reported_pose(const Pose& pose_true, const DriftState& drift, double pos_sigma, std::uint64_t seed) {
  Pose p = pose_true;
  p.heading += drift.heading_error;
  if (pos_sigma > 0.0) {
    Rng rng = make_rng({seed, 0x9a5ULL});
    p.position.x += normal(rng, pos_sigma);
    p.position.y += normal(rng, pos_sigma);
    p.position.z += normal(rng, pos_sigma);
  }
  return p;
}

}  // namespace swarmsense
