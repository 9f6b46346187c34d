#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "swarmsense/aperture.h"

namespace swarmsense {

struct PixelBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;
  bool operator==(const PixelBox&) const = default;
};

struct Blob {
  std::vector<int> pixels;  // row-major indices, ascending
  int area = 0;             // pixels
  double area_m2 = 0.0;
  double relevance = 0.0;   // sum of integral values over the pixel set
  PixelCoord centroid;      // value-weighted, focal-plane pixel coordinates
  Vec2 ground;              // world xy of the centroid on the focal plane
  double major_axis = 0.0;  // m, full length of the moment ellipse
  double minor_axis = 0.0;
  PixelBox bbox;

  double axis_ratio() const { return minor_axis > 0.0 ? major_axis / minor_axis : std::numeric_limits<double>::infinity(); }
};

struct BlobConstraints {
  double min_area = 0.0;  // m^2 on the focal plane
  double max_area = std::numeric_limits<double>::infinity();
  double min_axis_ratio = 1.0;
  double max_axis_ratio = std::numeric_limits<double>::infinity();
  double v_min = 0.125;  // visibility floor

  bool operator==(const BlobConstraints&) const = default;
};

void validate(const BlobConstraints& constraints);

// 8-connected component labeling by contour tracing. Labels are 1-based in
// raster-scan order of each component's first pixel; 0 is background.
Grid<int> label_components(const BinaryGrid& binary);

std::vector<Blob> find_blobs(const IntegralImage& integral, double v_min);

std::vector<Blob> prefilter_blobs(std::vector<Blob> blobs, const BlobConstraints& constraints);

struct Evaluation {
  std::optional<Blob> best;
  double confidence = 0.0;
  std::vector<Blob> blobs;  // admissible blobs, descending relevance
};

// Two-cluster confidence r1/r2; a lone cluster is compared with the smallest
// admissible relevance v_min * min_area_px.
Evaluation evaluate(const IntegralImage& integral, const BlobConstraints& constraints);

struct Observation {
  std::optional<Blob> best_blob;
  double confidence = 0.0;
  std::vector<double> reference_confidences;
  int reference = 0;
  std::vector<Blob> blobs;
  IntegralImage integral;  // the reference drone's anomaly integral
};

// Focal plane for a reference drone: the ground plane at height ground_z,
// optionally tilted.
struct PlaneTemplate {
  double ground_z = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  FocalPlane for_camera(const VirtualCamera& vcam) const;
  bool operator==(const PlaneTemplate&) const = default;
};

// Builds one parameter integral per candidate reference drone and keeps the most
// confident one (lowest index on ties).
Observation multi_reference_evaluate(std::span<const AnomalyMask> masks, std::span<const Pose> poses,
                                     const CameraModel& camera, const PlaneTemplate& plane,
                                     const IntegrationConfig& cfg, const BlobConstraints& constraints);

Vec2 blob_ground_position(const Blob& blob, const VirtualCamera& vcam, const FocalPlane& plane);

}  // namespace swarmsense
