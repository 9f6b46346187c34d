#pragma once

#include "swarmsense/harness.h"

namespace testing {

// Small closed-loop configuration: three drones over a sparse forest, 64x64 frames.
inline swarmsense::RunConfig small_config(int iterations = 3) {
  using namespace swarmsense;
  RunConfig c;
  c.scenario.forest_density = 100.0;
  c.scenario.target.waypoints = {{0.0, {50.0, 50.0}}, {20.0, {54.0, 58.0}}};
  c.scenario.seed = 5;
  c.hyper.N = 3;
  c.hyper.c1 = 1.0;
  c.hyper.c2 = 2.0;
  c.hyper.c3 = 0.5;
  c.hyper.c4 = 4.2;
  c.hyper.s = 4.2;
  c.camera = {c.hyper.fov, 64, 64};
  c.integration = {4, 3.0};
  c.blobs.min_area = 0.25;
  c.blobs.max_area = 10.0;
  c.iterations = iterations;
  c.seeds = Seeds::from(5);
  c.start = {50.0, 48.0};
  return c;
}

}  // namespace testing
