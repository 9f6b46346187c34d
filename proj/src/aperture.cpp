#include "swarmsense/aperture.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>

#include "swarmsense/error.h"

namespace swarmsense {

namespace {

using Mat3 = std::array<double, 9>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i * 3 + j] = a[i * 3] * b[j] + a[i * 3 + 1] * b[3 + j] + a[i * 3 + 2] * b[6 + j];
  return r;
}

// (col,row,1) -> normalized (x,y,1) for a camera model.
Mat3 pixel_to_normalized_matrix(const CameraModel& cam) {
  const double k = 2.0 * cam.half_extent();
  return {k / cam.width, 0.0, (0.5 / cam.width - 0.5) * k, 0.0, k / cam.height, (0.5 / cam.height - 0.5) * k,
          0.0, 0.0, 1.0};
}

Mat3 normalized_to_pixel_matrix(const CameraModel& cam) {
  const double k = 2.0 * cam.half_extent();
  return {cam.width / k, 0.0, 0.5 * cam.width - 0.5, 0.0, cam.height / k, 0.5 * cam.height - 0.5, 0.0, 0.0, 1.0};
}

Vec3 plane_normal(const VirtualCamera& vcam, const FocalPlane& plane) {
  const CameraAxes ax = camera_axes(vcam.heading);
  const double th = deg_to_rad(plane.theta);
  const double ph = deg_to_rad(plane.phi);
  const double a = std::sin(ph) * std::cos(th);
  const double b = std::sin(th);
  const double c = std::cos(th) * std::cos(ph);
  return {a * ax.right.x + b * ax.forward.x, a * ax.right.y + b * ax.forward.y, c};
}

// Columns map normalized (x,y,1) to the world ray direction.
Mat3 ray_matrix(double heading) {
  const CameraAxes ax = camera_axes(heading);
  return {ax.right.x, -ax.forward.x, 0.0, ax.right.y, -ax.forward.y, 0.0, 0.0, 0.0, -1.0};
}

constexpr double kParallelEps = 1e-9;

template <typename Sink>
void for_each_mapped(const VirtualCamera& vcam, const PlaneRegistration& reg, Sink&& sink) {
  PixelCoord pc;
  for (int row = 0; row < vcam.height; ++row) {
    for (int col = 0; col < vcam.width; ++col) {
      const bool ok = reg.map(col, row, pc);
      sink(static_cast<std::size_t>(row) * vcam.width + col, ok, pc);
    }
  }
}

void check_raster(int w, int h, const CameraModel& camera) {
  if (w != camera.width || h != camera.height) {
    throw Error(ErrorCategory::Dimension, "raster is " + std::to_string(w) + "x" + std::to_string(h) +
                                              " but the camera is " + std::to_string(camera.width) + "x" +
                                              std::to_string(camera.height));
  }
}

// Nearest-neighbour sample of mask pixel; false when outside the frame.
inline bool nearest(const BinaryGrid& g, const PixelCoord& pc, std::uint8_t& v) {
  const double fc = std::floor(pc.col + 0.5);
  const double fr = std::floor(pc.row + 0.5);
  if (fc < 0.0 || fr < 0.0 || fc >= g.width || fr >= g.height) return false;
  v = g.data[static_cast<std::size_t>(fr) * g.width + static_cast<std::size_t>(fc)];
  return true;
}

struct Accumulator {
  int width = 0;
  int height = 0;
  std::vector<double> sum;
  std::vector<int> count;

  Accumulator(int w, int h) : width(w), height(h), sum(static_cast<std::size_t>(w) * h, 0.0), count(sum.size(), 0) {}

  void add(const Layer& layer) {
    for (std::size_t p = 0; p < sum.size(); ++p) {
      if (layer.present[p]) {
        sum[p] += layer.values[p];
        ++count[p];
      }
    }
  }
};

}  // namespace

VirtualCamera virtual_camera_at(const Pose& reference, const CameraModel& camera) {
  return {reference.position, 0.0, camera.fov, camera.width, camera.height};
}

void validate(const IntegrationConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("integration.n", "must be >= 1");
  if (!(cfg.heading_range >= 0.0)) throw ConfigError("integration.heading_range", "must be >= 0");
  if (!(cfg.delta_range >= 0.0)) throw ConfigError("integration.delta_range", "must be >= 0");
  if (!(cfg.theta_range >= 0.0)) throw ConfigError("integration.theta_range", "must be >= 0");
  if (!(cfg.phi_range >= 0.0)) throw ConfigError("integration.phi_range", "must be >= 0");
}

std::vector<double> offset_steps(int n, double range) {
  if (n <= 1) return {0.0};
  std::vector<double> steps(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) steps[k] = -range + k * (2.0 * range / n);
  return steps;
}

double IntegralImage::pixel_pitch() const { return footprint_width(vcam.model(), plane.delta) / vcam.width; }

PlaneRegistration::PlaneRegistration(const VirtualCamera& vcam, const FocalPlane& plane, const Pose& drone_pose,
                                     const CameraModel& camera) {
  if (!(plane.delta > 0.0)) throw Error(ErrorCategory::Projection, "focal plane distance must be > 0");
  const Vec3 n = plane_normal(vcam, plane);
  const Vec3 c = vcam.position;
  const Vec3 p0 = c - Vec3{0.0, 0.0, plane.delta};
  const double k = n.dot(p0 - c);

  const Mat3 a = pixel_to_normalized_matrix(vcam.model());
  const Mat3 m = mul(ray_matrix(vcam.heading), a);  // (col,row,1) -> ray direction

  // Denominator n . d as a linear form.
  for (int j = 0; j < 3; ++j) den_[j] = n.x * m[j] + n.y * m[3 + j] + n.z * m[6 + j];
  const double corners[4][2] = {{-0.5, -0.5}, {vcam.width - 0.5, -0.5}, {-0.5, vcam.height - 0.5},
                                {vcam.width - 0.5, vcam.height - 0.5}};
  double lo = 1e300;
  double hi = -1e300;
  for (const auto& cr : corners) {
    const double d = den_[0] * cr[0] + den_[1] * cr[1] + den_[2];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (lo * hi <= 0.0 || std::min(std::abs(lo), std::abs(hi)) < kParallelEps) {
    throw Error(ErrorCategory::Projection, "virtual camera rays run parallel to the focal plane");
  }
  t_sign_ = k / ((lo + hi) * 0.5) > 0.0 ? 1.0 : -1.0;

  // G = (C - D) n^T + k I maps the ray direction (times n.d) to P - D.
  const Vec3 cd = c - drone_pose.position;
  const Mat3 g = {cd.x * n.x + k, cd.x * n.y,     cd.x * n.z,     cd.y * n.x, cd.y * n.y + k,
                  cd.y * n.z,     cd.z * n.x,     cd.z * n.y,     cd.z * n.z + k};
  const CameraAxes ax = camera_axes(drone_pose.heading);
  // Rows: right, -forward (image y is down), -up (depth).
  const Mat3 r = {ax.right.x, ax.right.y, 0.0, -ax.forward.x, -ax.forward.y, 0.0, 0.0, 0.0, -1.0};
  const Mat3 h = mul(normalized_to_pixel_matrix(camera), mul(r, mul(g, m)));
  std::copy(h.begin(), h.end(), h_);
}

bool PlaneRegistration::map(int col, int row, PixelCoord& out) const {
  const double den = den_[0] * col + den_[1] * row + den_[2];
  const double w = h_[6] * col + h_[7] * row + h_[8];
  // Requires the plane point in front of the virtual camera (t > 0) and in
  // front of the drone camera (w / den > 0).
  if (t_sign_ < 0.0 || !(w / den > 0.0)) return false;
  out.col = (h_[0] * col + h_[1] * row + h_[2]) / w;
  out.row = (h_[3] * col + h_[4] * row + h_[5]) / w;
  return true;
}

void check_plane(const VirtualCamera& vcam, const FocalPlane& plane) {
  const PlaneRegistration probe(vcam, plane, vcam.pose(), vcam.model());
  (void)probe;
}

Vec3 plane_point(const VirtualCamera& vcam, const FocalPlane& plane, double col, double row) {
  const Vec3 n = plane_normal(vcam, plane);
  const Vec3 d = pixel_ray(vcam.model(), vcam.pose(), col, row);
  const double den = n.dot(d);
  if (std::abs(den) < kParallelEps) throw Error(ErrorCategory::Projection, "ray parallel to focal plane");
  const Vec3 p0 = vcam.position - Vec3{0.0, 0.0, plane.delta};
  const double t = n.dot(p0 - vcam.position) / den;
  return vcam.position + d * t;
}

Layer project_layer(const AnomalyMask& mask, const Pose& reported_pose, const CameraModel& camera,
                    const FocalPlane& plane, const VirtualCamera& vcam, double heading_offset) {
  check_raster(mask.width(), mask.height(), camera);
  Pose pose = reported_pose;
  pose.heading += heading_offset;
  const PlaneRegistration reg(vcam, plane, pose, camera);
  Layer layer{vcam.width, vcam.height, 1, std::vector<float>(static_cast<std::size_t>(vcam.width) * vcam.height, 0.f),
              std::vector<std::uint8_t>(static_cast<std::size_t>(vcam.width) * vcam.height, 0)};
  for_each_mapped(vcam, reg, [&](std::size_t p, bool ok, const PixelCoord& pc) {
    std::uint8_t v = 0;
    if (ok && nearest(mask.flags, pc, v)) {
      layer.values[p] = v ? 1.f : 0.f;
      layer.present[p] = 1;
    }
  });
  return layer;
}

Layer project_layer(const Image& frame, const Pose& reported_pose, const CameraModel& camera,
                    const FocalPlane& plane, const VirtualCamera& vcam, double heading_offset) {
  check_raster(frame.width, frame.height, camera);
  Pose pose = reported_pose;
  pose.heading += heading_offset;
  const PlaneRegistration reg(vcam, plane, pose, camera);
  const int ch = frame.channels;
  const std::size_t px = static_cast<std::size_t>(vcam.width) * vcam.height;
  Layer layer{vcam.width, vcam.height, ch, std::vector<float>(px * ch, 0.f), std::vector<std::uint8_t>(px, 0)};
  const double wmax = frame.width - 0.5;
  const double hmax = frame.height - 0.5;
  for_each_mapped(vcam, reg, [&](std::size_t p, bool ok, const PixelCoord& pc) {
    if (!ok || pc.col < -0.5 || pc.row < -0.5 || pc.col > wmax || pc.row > hmax) return;
    const double x = std::clamp(pc.col, 0.0, frame.width - 1.0);
    const double y = std::clamp(pc.row, 0.0, frame.height - 1.0);
    const int x0 = std::min(static_cast<int>(x), frame.width - 2 < 0 ? 0 : frame.width - 2);
    const int y0 = std::min(static_cast<int>(y), frame.height - 2 < 0 ? 0 : frame.height - 2);
    const int x1 = std::min(x0 + 1, frame.width - 1);
    const int y1 = std::min(y0 + 1, frame.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    for (int c = 0; c < ch; ++c) {
      const double v = (1 - fx) * (1 - fy) * frame.at(x0, y0, c) + fx * (1 - fy) * frame.at(x1, y0, c) +
                       (1 - fx) * fy * frame.at(x0, y1, c) + fx * fy * frame.at(x1, y1, c);
      layer.values[p * ch + c] = static_cast<float>(v);
    }
    layer.present[p] = 1;
  });
  return layer;
}

IntegralImage integrate(std::span<const Layer> layers, const FocalPlane& plane, const VirtualCamera& vcam) {
  if (layers.empty()) throw Error(ErrorCategory::InvalidArgument, "integrate: no layers");
  const Layer& first = layers.front();
  for (const Layer& l : layers) {
    if (l.width != first.width || l.height != first.height || l.channels != first.channels) {
      throw Error(ErrorCategory::InvalidArgument, "integrate: layer dimensions differ");
    }
  }
  const int ch = first.channels;
  const std::size_t px = static_cast<std::size_t>(first.width) * first.height;
  IntegralImage out;
  out.values = Image(first.width, first.height, ch);
  out.plane = plane;
  out.vcam = vcam;
  out.drone_count = static_cast<int>(layers.size());
  out.integrations = static_cast<int>(layers.size());
  std::vector<int> count(px, 0);
  for (const Layer& l : layers) {  // fixed order keeps sums reproducible
    for (std::size_t p = 0; p < px; ++p) {
      if (!l.present[p]) continue;
      ++count[p];
      for (int c = 0; c < ch; ++c) out.values.data[p * ch + c] += l.values[p * ch + c];
    }
  }
  for (std::size_t p = 0; p < px; ++p) {
    if (count[p] == 0) continue;
    for (int c = 0; c < ch; ++c) out.values.data[p * ch + c] /= count[p];
  }
  return out;
}

IntegralImage parameter_integrate(std::span<const AnomalyMask> masks, std::span<const Pose> reported_poses,
                                  const CameraModel& camera, const FocalPlane& nominal_plane,
                                  const VirtualCamera& vcam, const IntegrationConfig& cfg) {
  validate(cfg);
  if (masks.empty()) throw Error(ErrorCategory::InvalidArgument, "parameter_integrate: no masks");
  if (masks.size() != reported_poses.size()) {
    throw Error(ErrorCategory::InvalidArgument, "parameter_integrate: " + std::to_string(masks.size()) +
                                                    " masks but " + std::to_string(reported_poses.size()) + " poses");
  }
  const std::size_t n_drones = masks.size();
  Accumulator acc(vcam.width, vcam.height);
  int integrations = 0;

  // Group (a): every drone at each heading offset on the nominal plane.
  for (std::size_t i = 0; i < n_drones; ++i) {
    for (double offset : offset_steps(cfg.n, cfg.heading_range)) {
      acc.add(project_layer(masks[i], reported_poses[i], camera, nominal_plane, vcam, offset));
      ++integrations;
    }
  }

  // Group (b): per plane parameter and offset, the all-drone mean at nominal headings.
  std::map<std::tuple<double, double, double>, Layer> composites;
  const auto composite = [&](const FocalPlane& plane) -> const Layer& {
    const auto key = std::make_tuple(plane.delta, plane.theta, plane.phi);
    auto it = composites.find(key);
    if (it != composites.end()) return it->second;
    Accumulator drones(vcam.width, vcam.height);
    for (std::size_t i = 0; i < n_drones; ++i) drones.add(project_layer(masks[i], reported_poses[i], camera, plane, vcam));
    Layer layer{vcam.width, vcam.height, 1, std::vector<float>(drones.sum.size(), 0.f),
                std::vector<std::uint8_t>(drones.sum.size(), 0)};
    for (std::size_t p = 0; p < drones.sum.size(); ++p) {
      if (drones.count[p] == 0) continue;
      layer.values[p] = static_cast<float>(drones.sum[p] / drones.count[p]);
      layer.present[p] = 1;
    }
    return composites.emplace(key, std::move(layer)).first->second;
  };
  for (int param = 0; param < 3; ++param) {
    const double range = param == 0 ? cfg.delta_range : param == 1 ? cfg.theta_range : cfg.phi_range;
    for (double offset : offset_steps(cfg.n, range)) {
      FocalPlane plane = nominal_plane;
      (param == 0 ? plane.delta : param == 1 ? plane.theta : plane.phi) += offset;
      acc.add(composite(plane));
      ++integrations;
    }
  }

  IntegralImage out;
  out.values = Image(vcam.width, vcam.height, 1);
  out.plane = nominal_plane;
  out.vcam = vcam;
  out.drone_count = static_cast<int>(n_drones);
  out.integrations = integrations;
  const double scale = cfg.normalize_by_n ? 1.0 : static_cast<double>(cfg.n);
  for (std::size_t p = 0; p < acc.sum.size(); ++p) {
    if (acc.count[p] > 0) out.values.data[p] = scale * acc.sum[p] / acc.count[p];
  }
  return out;
}

IntegralImage signal_integral(std::span<const Image> frames, std::span<const Pose> reported_poses,
                              const CameraModel& camera, const FocalPlane& plane, const VirtualCamera& vcam) {
  if (frames.size() != reported_poses.size()) {
    throw Error(ErrorCategory::InvalidArgument, "signal_integral: frame and pose counts differ");
  }
  std::vector<Layer> layers;
  layers.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    layers.push_back(project_layer(frames[i], reported_poses[i], camera, plane, vcam));
  }
  return integrate(layers, plane, vcam);
}

}  // namespace swarmsense
