#pragma once

#include <vector>

#include "swarmsense/raster.h"

namespace swarmsense {

// Global background statistics of a multispectral image.
struct RxStats {
  int channels = 0;
  std::vector<double> mean;        // spectral mean vector
  std::vector<double> covariance;  // population covariance, row-major channels x channels
  double epsilon = 0.0;            // ridge added to the diagonal before inversion
  std::vector<double> inverse;     // (covariance + epsilon I)^-1, row-major
};

using ScoreMap = Grid<double>;

struct AnomalyMask {
  BinaryGrid flags;
  double threshold_fraction = 0.0;

  int width() const { return flags.width; }
  int height() const { return flags.height; }
  std::size_t flagged() const;
};

// Ridge is 1e-6 * trace(K) / channels, with a tiny absolute floor so that
// constant images stay invertible.
RxStats rx_stats(const Image& image);

// Mahalanobis score (r - mean)^T (K + eps I)^-1 (r - mean) per pixel.
ScoreMap rx_scores(const Image& image, const RxStats& stats);

// Flags exactly floor((1 - t) * P) pixels: highest scores first, ties in row-major order.
AnomalyMask top_fraction_mask(const ScoreMap& scores, double t);

std::size_t flagged_count_for(std::size_t pixels, double t);

AnomalyMask detect_anomalies(const Image& image, double t);

}  // namespace swarmsense
