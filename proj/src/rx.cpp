#include "swarmsense/rx.h"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "swarmsense/error.h"

namespace swarmsense {

std::size_t AnomalyMask::flagged() const {
  return static_cast<std::size_t>(std::count(flags.data.begin(), flags.data.end(), std::uint8_t{1}));
}

RxStats rx_stats(const Image& image) {
  if (image.empty()) throw Error(ErrorCategory::InvalidArgument, "rx_stats: empty image");
  const int ch = image.channels;
  const std::size_t px = image.pixel_count();
  RxStats stats;
  stats.channels = ch;
  stats.mean.assign(ch, 0.0);
  for (std::size_t p = 0; p < px; ++p) {
    for (int c = 0; c < ch; ++c) stats.mean[c] += image.data[p * ch + c];
  }
  for (double& m : stats.mean) m /= static_cast<double>(px);

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ch, ch);
  Eigen::VectorXd d(ch);
  for (std::size_t p = 0; p < px; ++p) {
    for (int c = 0; c < ch; ++c) d[c] = image.data[p * ch + c] - stats.mean[c];
    k.noalias() += d * d.transpose();
  }
  k /= static_cast<double>(px);
  k = 0.5 * (k + k.transpose());

  stats.covariance.resize(static_cast<std::size_t>(ch) * ch);
  for (int r = 0; r < ch; ++r)
    for (int c = 0; c < ch; ++c) stats.covariance[r * ch + c] = k(r, c);

  stats.epsilon = std::max(1e-6 * k.trace() / ch, 1e-12);
  Eigen::MatrixXd reg = k + stats.epsilon * Eigen::MatrixXd::Identity(ch, ch);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
  Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(ch, ch));
  inv = 0.5 * (inv + inv.transpose());
  stats.inverse.resize(static_cast<std::size_t>(ch) * ch);
  for (int r = 0; r < ch; ++r)
    for (int c = 0; c < ch; ++c) stats.inverse[r * ch + c] = inv(r, c);
  return stats;
}

ScoreMap rx_scores(const Image& image, const RxStats& stats) {
  if (image.channels != stats.channels) {
    throw Error(ErrorCategory::Dimension, "rx_scores: image has " + std::to_string(image.channels) +
                                              " channels, statistics have " + std::to_string(stats.channels));
  }
  const int ch = image.channels;
  ScoreMap scores(image.width, image.height, 1);
  std::vector<double> d(ch);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    for (int c = 0; c < ch; ++c) d[c] = image.data[p * ch + c] - stats.mean[c];
    double q = 0.0;
    for (int r = 0; r < ch; ++r) {
      double row = 0.0;
      for (int c = 0; c < ch; ++c) row += stats.inverse[r * ch + c] * d[c];
      q += d[r] * row;
    }
    scores.data[p] = std::max(q, 0.0);
  }
  assert(std::all_of(scores.data.begin(), scores.data.end(), [](double s) { return s >= 0.0; }));
  return scores;
}

std::size_t flagged_count_for(std::size_t pixels, double t) {
  // The small bias keeps exact products such as 0.0025 * 327680 = 819.2 from
  // landing one below after rounding of (1 - t).
  const double k = std::floor((1.0 - t) * static_cast<double>(pixels) + 1e-9);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(pixels)));
}

AnomalyMask top_fraction_mask(const ScoreMap& scores, double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCategory::InvalidArgument, "top_fraction_mask: t must lie in (0,1)");
  AnomalyMask mask;
  mask.threshold_fraction = t;
  mask.flags = BinaryGrid(scores.width, scores.height, 1, 0);
  const std::size_t px = scores.pixel_count();
  const std::size_t k = flagged_count_for(px, t);
  if (k == 0) return mask;
  std::vector<int> order(px);
  std::iota(order.begin(), order.end(), 0);
  const auto before = [&](int a, int b) {
    if (scores.data[a] != scores.data[b]) return scores.data[a] > scores.data[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), before);
  for (std::size_t i = 0; i < k; ++i) mask.flags.data[order[i]] = 1;
  return mask;
}

AnomalyMask detect_anomalies(const Image& image, double t) {
  return top_fraction_mask(rx_scores(image, rx_stats(image)), t);
}

}  // namespace swarmsense
