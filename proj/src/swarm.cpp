#include "swarmsense/swarm.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "swarmsense/error.h"
#include "swarmsense/random.h"

namespace swarmsense {

namespace {

// Congruent circles packed in a circle: enclosing radius / circle radius.
constexpr std::array<double, 12> kPackingNumbers = {
    2.0,                     // N=2
    2.154700538379251529,    // N=3
    2.414213562373095049,    // N=4
    2.701301616704079930,    // N=5
    3.0,                     // N=6
    3.0,                     // N=7
    3.304764871832904481,    // N=8
    3.613125929752753055,    // N=9
    3.813026151380070279,    // N=10
    3.923804400312941142,    // N=11
    4.029601930120843,       // N=12
    4.236067977499789696,    // N=13
};

constexpr double kSpacingSlack = 1e-6;
constexpr int kMaxSweeps = 100;

}  // namespace

void validate(const Hyperparameters& h) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCategory::InvalidArgument, "hyperparameters: " + what); };
  if (h.N < 1) fail("N must be >= 1");
  if (!(h.c1 >= 0.0) || !(h.c2 >= 0.0) || !(h.c3 >= 0.0)) fail("c1, c2 and c3 must be >= 0");
  if (!(h.c4 > 0.0)) fail("c4 must be > 0");
  if (!(h.c1 + h.c2 <= h.c4 + 1e-12)) fail("requires c1 + c2 <= c4");
  if (!(h.c1 <= h.c2)) fail("requires c1 <= c2");
  if (!(h.c5 >= 0.0 && h.c5 <= 1.0)) fail("c5 must lie in [0,1]");
  if (!(h.s > 0.0)) fail("s must be > 0");
  if (!(h.T > 1.0)) fail("T must be > 1");
  if (!(h.fov > 0.0 && h.fov < 180.0)) fail("fov must lie in (0,180)");
  if (!(h.safety_margin >= 0.0)) fail("safety_margin must be >= 0");
  if (h.delta_h && !(*h.delta_h >= 0.0)) fail("delta_h must be >= 0");
  if (h.c3_max && !(*h.c3_max >= 0.0)) fail("c3_max must be >= 0");
  if (std::abs(h.sd.norm() - 1.0) > 1e-9) fail("SD must be a unit vector");
}

double packing_number(int n) {
  if (n < 2 || n > 13) {
    throw Error(ErrorCategory::TableMiss, "no circle-packing number tabulated for N=" + std::to_string(n));
  }
  return kPackingNumbers[static_cast<std::size_t>(n - 2)];
}

double sa_diameter(double c4, int n) { return c4 * packing_number(n); }

double altitude_gap(int n, double c4, double fov_deg, double safety_margin) {
  if (n < 2) return 0.0;
  return c4 / (n - 1) / std::tan(deg_to_rad(fov_deg) / 2.0) + safety_margin;
}

std::vector<double> altitude_offsets_for_gap(int n, double gap) {
  std::vector<double> z(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) z[i] = i * gap;
  return z;
}

std::vector<double> altitude_offsets(int n, double c4, double fov_deg, double safety_margin) {
  return altitude_offsets_for_gap(n, altitude_gap(n, c4, fov_deg, safety_margin));
}

double stack_height(int n, double gap) { return n < 2 ? 0.0 : (n - 1) * gap; }

std::vector<double> altitude_offsets(const Hyperparameters& h) {
  return h.delta_h ? altitude_offsets_for_gap(h.N, *h.delta_h) : altitude_offsets(h.N, h.c4, h.fov, h.safety_margin);
}

double min_pairwise_distance(const std::vector<Vec2>& p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) d = std::min(d, (p[i] - p[j]).norm());
  return d;
}

ScatterResult rutherford_scatter(std::vector<Vec2> positions, double c4, std::uint64_t seed) {
  ScatterResult out;
  const std::size_t n = positions.size();
  out.converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool pushed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec2 d = positions[i] - positions[j];
        const double dist = d.norm();
        if (dist >= c4) continue;
        Vec2 dir;
        if (dist > 1e-12) {
          dir = d / dist;
        } else {
          Rng rng = make_rng({seed, i, j, 0x5ca7ULL});
          dir = random_unit_vector(rng);
        }
        const double push = 0.5 * (c4 - dist) + kSpacingSlack;
        positions[i] += dir * push;
        positions[j] -= dir * push;
        pushed = true;
      }
    }
    if (!pushed) {
      out.converged = true;
      break;
    }
    out.sweeps = sweep + 1;
  }
  if (!out.converged) out.converged = min_pairwise_distance(positions) >= c4 - kSpacingSlack;
  out.positions = std::move(positions);
  return out;
}

const char* mode_name(SwarmMode mode) {
  switch (mode) {
    case SwarmMode::Scanning: return "SCANNING";
    case SwarmMode::Tracking: return "TRACKING";
    case SwarmMode::Guided: return "GUIDED";
  }
  return "?";
}

const char* branch_name(Branch branch) {
  switch (branch) {
    case Branch::Initial: return "initial";
    case Branch::Diverge: return "diverge";
    case Branch::Converge: return "converge";
    case Branch::Guided: return "guided";
  }
  return "?";
}

SwarmMode mode_from_name(const std::string& name) {
  if (name == "SCANNING") return SwarmMode::Scanning;
  if (name == "TRACKING") return SwarmMode::Tracking;
  if (name == "GUIDED") return SwarmMode::Guided;
  throw Error(ErrorCategory::InvalidArgument, "unknown swarm mode " + name);
}

Branch branch_from_name(const std::string& name) {
  if (name == "initial") return Branch::Initial;
  if (name == "diverge") return Branch::Diverge;
  if (name == "converge") return Branch::Converge;
  if (name == "guided") return Branch::Guided;
  throw Error(ErrorCategory::InvalidArgument, "unknown branch " + name);
}

Vec2 SwarmState::centroid() const {
  Vec2 c;
  if (positions.empty()) return c;
  for (const Vec2& p : positions) c += p;
  return c / static_cast<double>(positions.size());
}

std::vector<Vec2> formation_line(Vec2 center, Vec2 sd, double spacing, int n) {
  const Vec2 across{sd.y, -sd.x};
  std::vector<Vec2> slots(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) slots[k] = center + across * ((k - 0.5 * (n - 1)) * spacing);
  return slots;
}

SwarmState initial_state(const Hyperparameters& hyper, Vec2 center, double base_altitude) {
  validate(hyper);
  SwarmState s;
  s.positions = rutherford_scatter(formation_line(center, hyper.sd, hyper.s, hyper.N), hyper.c4).positions;
  s.velocities.assign(s.positions.size(), Vec2{});
  for (double dz : altitude_offsets(hyper)) s.altitudes.push_back(base_altitude + dz);
  s.sd = hyper.sd;
  s.c3_current = hyper.c3;
  return s;
}

Vec2 exploration_vector(std::uint64_t seed, int drone, int iteration) {
  Rng rng = make_rng({seed, static_cast<std::uint64_t>(drone), static_cast<std::uint64_t>(iteration), 0xe8b1ULL});
  return random_unit_vector(rng);
}

namespace {

void move_to(SwarmState& s, std::vector<Vec2> target, double c4, std::uint64_t seed) {
  ScatterResult r = rutherford_scatter(std::move(target), c4, seed);
  for (std::size_t i = 0; i < s.positions.size(); ++i) s.velocities[i] = r.positions[i] - s.positions[i];
  s.positions = std::move(r.positions);
}

}  // namespace

SwarmState converge_step(const SwarmState& state, Vec2 p_best, const Hyperparameters& hyper, std::uint64_t seed) {
  SwarmState next = state;
  std::vector<Vec2> target(state.positions.size());
  for (int i = 0; i < state.size(); ++i) {
    const Vec2 explore = hyper.c1 > 0.0 ? exploration_vector(seed, i, state.iteration) * hyper.c1 : Vec2{};
    const Vec2 exploit = unit_or_zero(p_best - state.positions[i]) * hyper.c2;
    target[i] = state.positions[i] + explore + exploit + state.sd * state.c3_current;
  }
  move_to(next, std::move(target), hyper.c4, derive_seed({seed, static_cast<std::uint64_t>(state.iteration)}));
  return next;
}

std::vector<int> assign_slots(const std::vector<Vec2>& positions, const std::vector<Vec2>& slots) {
  const int n = static_cast<int>(positions.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  if (n <= 8) {
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double cost = 0.0;
      for (int i = 0; i < n && cost < best_cost; ++i) cost += (positions[i] - slots[perm[i]]).norm();
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int round = 0; round < n; ++round) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bs = -1;
    for (int i = 0; i < n; ++i) {
      if (out[i] >= 0) continue;
      for (int k = 0; k < n; ++k) {
        if (used[k]) continue;
        const double d = (positions[i] - slots[k]).norm();
        if (d < best) {
          best = d;
          bi = i;
          bs = k;
        }
      }
    }
    out[bi] = bs;
    used[bs] = true;
  }
  return out;
}

std::vector<Vec2> interpolate_to_line(const std::vector<Vec2>& positions, const std::vector<Vec2>& slots, double c5) {
  const std::vector<int> assign = assign_slots(positions, slots);
  std::vector<Vec2> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = positions[i] + (slots[assign[i]] - positions[i]) * c5;
  return out;
}

SwarmState diverge_step(const SwarmState& state, const Hyperparameters& hyper) {
  SwarmState next = state;
  const double advance = hyper.advance == LineAdvance::ByC3 ? state.c3_current : hyper.s;
  const Vec2 center = state.centroid() + state.sd * advance;
  const auto slots = formation_line(center, state.sd, hyper.s, state.size());
  move_to(next, interpolate_to_line(state.positions, slots, hyper.c5), hyper.c4,
          derive_seed({0xd17eULL, static_cast<std::uint64_t>(state.iteration)}));
  return next;
}

SwarmState pso_step(const SwarmState& state, const Observation& obs, const Hyperparameters& hyper, std::uint64_t seed) {
  SwarmState next = state;
  const bool detected = obs.confidence > hyper.T && obs.best_blob.has_value();
  if (detected) {
    const Vec2 estimate = obs.best_blob->ground;
    if (!next.track.empty()) {
      const TrackPoint& prev = next.track.back();
      const Vec2 disp = estimate - prev.position;
      const int gap = std::max(1, state.iteration - prev.iteration);
      next.c3_current = std::min(disp.norm() / gap, hyper.c3_limit());
      if (disp.norm() > 1e-9) next.sd = disp / disp.norm();
    }
    next.track.push_back({state.iteration, estimate});
    next.mode = SwarmMode::Tracking;
    const Vec2 p_best = state.positions[static_cast<std::size_t>(obs.reference)];
    next = converge_step(next, p_best, hyper, seed);
    next.last_branch = Branch::Converge;
  } else {
    if (!next.track.empty()) {
      const Vec2 towards = next.track.back().position - state.centroid();
      if (towards.norm() > 1e-9) next.sd = towards / towards.norm();
    }
    next.mode = SwarmMode::Scanning;
    next = diverge_step(next, hyper);
    next.last_branch = Branch::Diverge;
  }
  next.iteration = state.iteration + 1;
  return next;
}

SwarmState translate_to(const SwarmState& state, Vec2 centroid) {
  SwarmState next = state;
  const Vec2 shift = centroid - state.centroid();
  for (std::size_t i = 0; i < next.positions.size(); ++i) {
    next.positions[i] += shift;
    next.velocities[i] = shift;
  }
  return next;
}

SwarmState guided_follow(const SwarmState& state, Vec2 guide_xy, double move_epsilon, const Observation& obs,
                         const Hyperparameters& hyper, std::uint64_t seed) {
  const bool moved = !state.last_guide || (guide_xy - *state.last_guide).norm() > move_epsilon;
  if (!moved) return pso_step(state, obs, hyper, seed);
  SwarmState next = translate_to(state, guide_xy);
  next.last_guide = guide_xy;
  next.mode = SwarmMode::Guided;
  next.last_branch = Branch::Guided;
  next.iteration = state.iteration + 1;
  return next;
}

}  // namespace swarmsense
