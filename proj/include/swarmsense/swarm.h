#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swarmsense/geometry.h"
#include "swarmsense/objective.h"

namespace swarmsense {

enum class LineAdvance { ByC3, ByS };

struct Hyperparameters {
  double c1 = 1.0;   // exploration, m
  double c2 = 2.0;   // exploitation, m
  double c3 = 1.0;   // target / scan speed, m per iteration
  double c4 = 4.2;   // minimum horizontal distance, m
  double c5 = 0.3;   // divergence smoothness in [0,1]
  double s = 4.2;    // line-formation spacing, m
  Vec2 sd{0.0, 1.0};  // scanning direction (unit ground vector)
  double T = 2.0;    // confidence threshold
  int N = 6;
  double fov = 43.0;  // degrees
  double safety_margin = 0.2;
  // Fixed altitude gap; when unset the gap follows from c4, N and fov.
  std::optional<double> delta_h;
  LineAdvance advance = LineAdvance::ByC3;
  // Cap on the measured target speed fed back into c3; unset means 2 * c3.
  std::optional<double> c3_max;

  double c3_limit() const { return c3_max.value_or(2.0 * c3); }

  bool operator==(const Hyperparameters&) const = default;
};

// Throws Error(InvalidArgument) naming the violated rule.
void validate(const Hyperparameters& hyper);

// Enclosing-to-unit radius ratio for N congruent circles in a circle, N in 2..13.
double packing_number(int n);
double sa_diameter(double c4, int n);

double altitude_gap(int n, double c4, double fov_deg, double safety_margin);
std::vector<double> altitude_offsets(int n, double c4, double fov_deg, double safety_margin);
std::vector<double> altitude_offsets_for_gap(int n, double gap);
double stack_height(int n, double gap);
std::vector<double> altitude_offsets(const Hyperparameters& hyper);

struct ScatterResult {
  std::vector<Vec2> positions;
  int sweeps = 0;
  bool converged = true;
};

// Symmetric pairwise push until every horizontal distance is at least c4.
ScatterResult rutherford_scatter(std::vector<Vec2> positions, double c4, std::uint64_t seed = 0);

enum class SwarmMode { Scanning, Tracking, Guided };
enum class Branch { Initial, Diverge, Converge, Guided };

const char* mode_name(SwarmMode mode);
const char* branch_name(Branch branch);
SwarmMode mode_from_name(const std::string& name);
Branch branch_from_name(const std::string& name);

struct TrackPoint {
  int iteration = 0;
  Vec2 position;
  bool operator==(const TrackPoint&) const = default;
};

struct SwarmState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<double> altitudes;  // absolute, fixed per drone for the run
  SwarmMode mode = SwarmMode::Scanning;
  Vec2 sd{0.0, 1.0};
  std::vector<TrackPoint> track;
  double c3_current = 0.0;
  int iteration = 0;
  std::optional<Vec2> guide;
  std::optional<Vec2> last_guide;
  bool release_pending = false;
  Branch last_branch = Branch::Initial;

  int size() const { return static_cast<int>(positions.size()); }
  Vec2 centroid() const;
  bool operator==(const SwarmState&) const = default;
};

// Drones on the scan line centred at `center`, altitudes base + offsets.
SwarmState initial_state(const Hyperparameters& hyper, Vec2 center, double base_altitude);

double min_pairwise_distance(const std::vector<Vec2>& positions);

// Unit exploration vector for one drone and iteration.
Vec2 exploration_vector(std::uint64_t seed, int drone, int iteration);

SwarmState converge_step(const SwarmState& state, Vec2 p_best, const Hyperparameters& hyper, std::uint64_t seed);

// Scan-line slots orthogonal to sd.
std::vector<Vec2> formation_line(Vec2 center, Vec2 sd, double spacing, int n);

// Minimal total distance drone-to-slot assignment (exhaustive up to 8 drones).
std::vector<int> assign_slots(const std::vector<Vec2>& positions, const std::vector<Vec2>& slots);

std::vector<Vec2> interpolate_to_line(const std::vector<Vec2>& positions, const std::vector<Vec2>& slots, double c5);

SwarmState diverge_step(const SwarmState& state, const Hyperparameters& hyper);

// The observation's ground estimate is taken from obs.best_blob->ground.
SwarmState pso_step(const SwarmState& state, const Observation& obs, const Hyperparameters& hyper, std::uint64_t seed);

SwarmState translate_to(const SwarmState& state, Vec2 centroid);

SwarmState guided_follow(const SwarmState& state, Vec2 guide_xy, double move_epsilon, const Observation& obs,
                         const Hyperparameters& hyper, std::uint64_t seed);

}  // namespace swarmsense
