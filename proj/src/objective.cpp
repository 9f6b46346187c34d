#include "swarmsense/objective.h"

#include <algorithm>
#include <cmath>

#include "swarmsense/error.h"

namespace swarmsense {

namespace {

// Clockwise neighbour offsets starting east (image y grows downward).
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

constexpr int kVisitedBackground = -1;

// Padded working buffers for contour-tracing labeling.
class ContourLabeler {
 public:
  explicit ContourLabeler(const BinaryGrid& binary)
      : w_(binary.width + 2), h_(binary.height + 2), fg_(static_cast<std::size_t>(w_) * h_, 0), label_(fg_.size(), 0) {
    for (int y = 0; y < binary.height; ++y)
      for (int x = 0; x < binary.width; ++x) fg_[idx(x + 1, y + 1)] = binary.at(x, y) != 0;
  }

  Grid<int> run(int width, int height) {
    int next = 0;
    for (int y = 1; y < h_ - 1; ++y) {
      for (int x = 1; x < w_ - 1; ++x) {
        const std::size_t p = idx(x, y);
        if (!fg_[p]) continue;
        if (label_[p] == 0 && !fg_[idx(x, y - 1)]) {
          trace(x, y, 7, ++next);  // external contour
        }
        if (!fg_[idx(x, y + 1)] && label_[idx(x, y + 1)] == 0) {
          const int lab = label_[p] != 0 ? label_[p] : label_[idx(x - 1, y)];
          trace(x, y, 3, lab);  // internal contour
        }
        if (label_[p] == 0) label_[p] = label_[idx(x - 1, y)];
      }
    }
    Grid<int> out(width, height, 1, 0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(x, y) = std::max(0, label_[idx(x + 1, y + 1)]);
    return out;
  }

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }

  // Clockwise search from direction d; marks background neighbours as visited.
  bool tracer(int x, int y, int d, int& nx, int& ny, int& nd) {
    for (int i = 0; i < 8; ++i) {
      const int k = (d + i) % 8;
      const int qx = x + kDx[k];
      const int qy = y + kDy[k];
      const std::size_t q = idx(qx, qy);
      if (fg_[q]) {
        nx = qx;
        ny = qy;
        nd = k;
        return true;
      }
      label_[q] = kVisitedBackground;
    }
    return false;
  }

  void trace(int sx, int sy, int start_dir, int lab) {
    label_[idx(sx, sy)] = lab;
    int tx = 0, ty = 0, dir = 0;
    if (!tracer(sx, sy, start_dir, tx, ty, dir)) return;  // isolated pixel
    int cx = tx, cy = ty;
    label_[idx(cx, cy)] = lab;
    while (true) {
      int nx = 0, ny = 0, nd = 0;
      tracer(cx, cy, (dir + 6) % 8, nx, ny, nd);
      if (cx == sx && cy == sy && nx == tx && ny == ty) break;
      cx = nx;
      cy = ny;
      dir = nd;
      label_[idx(cx, cy)] = lab;
    }
  }

  int w_;
  int h_;
  std::vector<std::uint8_t> fg_;
  std::vector<int> label_;
};

double min_area_pixels(const BlobConstraints& c, double pitch) {
  return std::max(1.0, c.min_area / (pitch * pitch));
}

}  // namespace

void validate(const BlobConstraints& c) {
  if (!(c.min_area >= 0.0) || !(c.min_area <= c.max_area)) throw ConfigError("blobs.min_area", "requires 0 <= min <= max");
  if (!(c.min_axis_ratio >= 1.0) || !(c.min_axis_ratio <= c.max_axis_ratio)) {
    throw ConfigError("blobs.axis_ratio", "requires 1 <= min <= max");
  }
  if (!(c.v_min > 0.0 && c.v_min < 1.0)) throw ConfigError("blobs.v_min", "must lie in (0,1)");
}

Grid<int> label_components(const BinaryGrid& binary) {
  ContourLabeler labeler(binary);
  return labeler.run(binary.width, binary.height);
}

FocalPlane PlaneTemplate::for_camera(const VirtualCamera& vcam) const {
  return {vcam.position.z - ground_z, theta, phi};
}

Vec2 blob_ground_position(const Blob& blob, const VirtualCamera& vcam, const FocalPlane& plane) {
  return plane_point(vcam, plane, blob.centroid.col, blob.centroid.row).xy();
}

std::vector<Blob> find_blobs(const IntegralImage& integral, double v_min) {
  const Image& img = integral.values;
  BinaryGrid binary(img.width, img.height, 1, 0);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) binary.data[p] = img.data[p * img.channels] >= v_min;
  const Grid<int> labels = label_components(binary);
  int count = 0;
  for (int l : labels.data) count = std::max(count, l);

  std::vector<Blob> blobs(static_cast<std::size_t>(count));
  for (Blob& b : blobs) b.bbox = {img.width, img.height, -1, -1};
  for (std::size_t p = 0; p < labels.data.size(); ++p) {
    const int l = labels.data[p];
    if (l == 0) continue;
    Blob& b = blobs[l - 1];
    const int x = static_cast<int>(p % img.width);
    const int y = static_cast<int>(p / img.width);
    b.pixels.push_back(static_cast<int>(p));
    b.bbox.min_x = std::min(b.bbox.min_x, x);
    b.bbox.min_y = std::min(b.bbox.min_y, y);
    b.bbox.max_x = std::max(b.bbox.max_x, x);
    b.bbox.max_y = std::max(b.bbox.max_y, y);
  }

  const double pitch = integral.pixel_pitch();
  for (Blob& b : blobs) {
    b.area = static_cast<int>(b.pixels.size());
    b.area_m2 = b.area * pitch * pitch;
    double sx = 0.0, sy = 0.0, mx = 0.0, my = 0.0;
    for (int p : b.pixels) {
      const double v = img.data[static_cast<std::size_t>(p) * img.channels];
      const double x = p % img.width;
      const double y = p / img.width;
      b.relevance += v;
      sx += v * x;
      sy += v * y;
      mx += x;
      my += y;
    }
    b.centroid = {sx / b.relevance, sy / b.relevance};
    mx /= b.area;
    my /= b.area;
    // Second moments of the pixel squares (each adds 1/12 per axis).
    double cxx = 1.0 / 12.0, cyy = 1.0 / 12.0, cxy = 0.0;
    for (int p : b.pixels) {
      const double dx = p % img.width - mx;
      const double dy = p / img.width - my;
      cxx += dx * dx / b.area;
      cyy += dy * dy / b.area;
      cxy += dx * dy / b.area;
    }
    const double tr = 0.5 * (cxx + cyy);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy));
    b.major_axis = 4.0 * std::sqrt(tr + disc) * pitch;
    b.minor_axis = 4.0 * std::sqrt(std::max(tr - disc, 0.0)) * pitch;
    b.ground = blob_ground_position(b, integral.vcam, integral.plane);
  }
  return blobs;
}

std::vector<Blob> prefilter_blobs(std::vector<Blob> blobs, const BlobConstraints& c) {
  std::erase_if(blobs, [&](const Blob& b) {
    const double ratio = b.axis_ratio();
    return b.area_m2 < c.min_area || b.area_m2 > c.max_area || ratio < c.min_axis_ratio || ratio > c.max_axis_ratio;
  });
  return blobs;
}

Evaluation evaluate(const IntegralImage& integral, const BlobConstraints& constraints) {
  Evaluation ev;
  ev.blobs = prefilter_blobs(find_blobs(integral, constraints.v_min), constraints);
  std::stable_sort(ev.blobs.begin(), ev.blobs.end(),
                   [](const Blob& a, const Blob& b) { return a.relevance > b.relevance; });
  if (ev.blobs.empty()) return ev;
  ev.best = ev.blobs.front();
  if (ev.blobs.size() >= 2) {
    ev.confidence = ev.blobs[0].relevance / ev.blobs[1].relevance;
  } else {
    ev.confidence = ev.blobs[0].relevance / (constraints.v_min * min_area_pixels(constraints, integral.pixel_pitch()));
  }
  return ev;
}

Observation multi_reference_evaluate(std::span<const AnomalyMask> masks, std::span<const Pose> poses,
                                     const CameraModel& camera, const PlaneTemplate& plane,
                                     const IntegrationConfig& cfg, const BlobConstraints& constraints) {
  if (masks.empty()) throw Error(ErrorCategory::InvalidArgument, "multi_reference_evaluate: no drones");
  if (masks.size() != poses.size()) {
    throw Error(ErrorCategory::InvalidArgument, "multi_reference_evaluate: mask and pose counts differ");
  }
  Observation best;
  best.confidence = -1.0;
  std::vector<double> confidences;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const VirtualCamera vcam = virtual_camera_at(poses[i], camera);
    IntegralImage integral = parameter_integrate(masks, poses, camera, plane.for_camera(vcam), vcam, cfg);
    Evaluation ev = evaluate(integral, constraints);
    confidences.push_back(ev.confidence);
    if (ev.confidence > best.confidence) {
      best.best_blob = std::move(ev.best);
      best.confidence = ev.confidence;
      best.reference = static_cast<int>(i);
      best.blobs = std::move(ev.blobs);
      best.integral = std::move(integral);
    }
  }
  best.reference_confidences = std::move(confidences);
  return best;
}

}  // namespace swarmsense
