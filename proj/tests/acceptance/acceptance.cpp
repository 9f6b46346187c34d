#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "swarmsense/bridge.h"
#include "swarmsense/error.h"
#include "swarmsense/harness.h"
#include "swarmsense/random.h"

using namespace swarmsense;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool ok = o.pass && in_time;
  failures += !ok;
  std::printf("%s %d %s (%.2f s, budget %.0f s) %s%s\n", ok ? "PASS" : "FAIL", id, name, secs, budget_s,
              o.detail.c_str(), in_time ? "" : " [over budget]");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

AnomalyMask empty_mask(const CameraModel& cam) {
  AnomalyMask m;
  m.flags = BinaryGrid(cam.width, cam.height, 1, 0);
  m.threshold_fraction = 0.99;
  return m;
}

// Flags every pixel whose ground footprint lies within one of the disks.
AnomalyMask disk_mask(const CameraModel& cam, const Pose& p, const std::vector<Vec2>& disks, double radius) {
  AnomalyMask m = empty_mask(cam);
  for (int r = 0; r < cam.height; ++r) {
    for (int c = 0; c < cam.width; ++c) {
      const Vec3 d = pixel_ray(cam, p, c, r);
      const double s = p.position.z / -d.z;
      const Vec2 g{p.position.x + s * d.x, p.position.y + s * d.y};
      for (const Vec2& k : disks)
        if ((g - k).norm() <= radius) m.flags.at(c, r, 0) = 1;
    }
  }
  return m;
}

Outcome visibility() {
  const CameraModel cam{43.0, 64, 64};
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i) poses.push_back({{50.0 + 1.5 * i, 50.0 - 0.7 * i, 30.0 + 2.0 * i}, 12.0 * i});
  const VirtualCamera vcam = virtual_camera_at(poses[0], cam);
  const FocalPlane plane{30.0, 0.0, 0.0};
  const Vec3 point = plane_point(vcam, plane, 32, 32);
  std::vector<Layer> layers;
  for (int i = 0; i < 5; ++i) {
    AnomalyMask m = empty_mask(cam);
    if (i % 2 == 0) {
      const PixelCoord px = *project_point(cam, poses[i], point);
      const int c0 = static_cast<int>(std::lround(px.col)), r0 = static_cast<int>(std::lround(px.row));
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) m.flags.at(c0 + dc, r0 + dr, 0) = 1;
    }
    layers.push_back(project_layer(m, poses[i], cam, plane, vcam));
  }
  int present = 0;
  for (const Layer& l : layers) present += l.present[32 * 64 + 32];
  const double v = integrate(layers, plane, vcam).values.at(32, 32, 0);
  return {present == 5 && std::abs(v - 0.6) <= 1e-9, fmt("value %.12f from %d present layers", v, present)};
}

Outcome accounting() {
  const CameraModel cam{43.0, 32, 32};
  std::vector<AnomalyMask> masks(5, empty_mask(cam));
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i) poses.push_back({{50.0 + i, 50.0, 35.0 + 2.0 * i}, 0.0});
  IntegrationConfig cfg;
  cfg.n = 10;
  cfg.heading_range = 5.0;
  cfg.delta_range = 1.0;
  cfg.theta_range = 2.0;
  cfg.phi_range = 2.0;
  const VirtualCamera vcam = virtual_camera_at(poses[0], cam);
  const IntegralImage ii = parameter_integrate(masks, poses, cam, {35.0, 0, 0}, vcam, cfg);
  return {ii.integrations == 80, fmt("%d transformed rasters", ii.integrations)};
}

Outcome drift_robustness() {
  const CameraModel cam{43.0, 128, 128};
  const double alt = 35.0, base = 4.0, radius = 0.6, spread = 3.0;
  const std::vector<Vec2> disks = {{50 - spread, 50}, {50 + spread, 50 + 0.5 * spread}, {50, 50 - spread}};
  const BlobConstraints bc;
  IntegrationConfig registered;
  IntegrationConfig swept;
  swept.n = 10;
  swept.heading_range = 5.0;
  int centroid_ok = 0, relevance_ok = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng({0xc3, static_cast<std::uint64_t>(seed)});
    std::vector<Pose> truth, reported;
    std::vector<AnomalyMask> masks;
    for (int i = 0; i < 3; ++i) {
      const double a = 2.0 * kPi * i / 3.0;
      const Pose p{{50 + base * std::cos(a), 50 + base * std::sin(a), alt + 2.5 * i}, 0.0};
      truth.push_back(p);
      masks.push_back(disk_mask(cam, p, disks, radius));
      Pose q = p;
      q.heading += uniform(rng, -5.0, 5.0);
      reported.push_back(q);
    }
    const VirtualCamera vcam = virtual_camera_at(truth[0], cam);
    const FocalPlane plane{alt, 0.0, 0.0};
    const auto ideal = find_blobs(parameter_integrate(masks, truth, cam, plane, vcam, registered), bc.v_min);
    const auto naive = find_blobs(parameter_integrate(masks, reported, cam, plane, vcam, registered), bc.v_min);
    const auto param = find_blobs(parameter_integrate(masks, reported, cam, plane, vcam, swept), bc.v_min);
    double worst = ideal.empty() ? 1e9 : 0.0;
    for (const Blob& b : ideal) {
      double best = 1e9;
      for (const Blob& q : param)
        best = std::min(best, std::hypot(q.centroid.col - b.centroid.col, q.centroid.row - b.centroid.row));
      worst = std::max(worst, best);
    }
    double peak_naive = 0.0, peak_param = 0.0;
    for (const Blob& b : naive) peak_naive = std::max(peak_naive, b.relevance);
    for (const Blob& b : param) peak_param = std::max(peak_param, b.relevance);
    centroid_ok += worst <= 1.0;
    relevance_ok += peak_param >= peak_naive;
  }
  return {centroid_ok >= 18 && relevance_ok >= 18,
          fmt("centroids within 1 px in %d/20 seeds, peak relevance >= naive in %d/20 seeds (need 18 each)",
              centroid_ok, relevance_ok)};
}

// Extended-precision mean, population covariance, ridge, Gauss-Jordan inverse and quadratic form.
std::vector<double> dense_scores(const Image& img) {
  const int ch = img.channels;
  const std::size_t px = img.pixel_count();
  long double mu[3] = {0, 0, 0};
  for (std::size_t p = 0; p < px; ++p)
    for (int c = 0; c < ch; ++c) mu[c] += img.data[p * ch + c];
  for (int c = 0; c < ch; ++c) mu[c] /= px;
  long double k[3][3] = {};
  for (std::size_t p = 0; p < px; ++p)
    for (int a = 0; a < ch; ++a)
      for (int b = 0; b < ch; ++b) k[a][b] += (img.data[p * ch + a] - mu[a]) * (img.data[p * ch + b] - mu[b]);
  long double trace = 0.0;
  for (int a = 0; a < ch; ++a) {
    for (int b = 0; b < ch; ++b) k[a][b] /= px;
    trace += k[a][a];
  }
  const long double eps = std::max(1e-6L * trace / ch, 1e-12L);
  long double aug[3][6] = {};
  for (int r = 0; r < ch; ++r) {
    for (int c = 0; c < ch; ++c) aug[r][c] = k[r][c] + (r == c ? eps : 0.0L);
    aug[r][ch + r] = 1.0L;
  }
  for (int col = 0; col < ch; ++col) {
    int piv = col;
    for (int r = col + 1; r < ch; ++r)
      if (std::fabs(aug[r][col]) > std::fabs(aug[piv][col])) piv = r;
    std::swap(aug[col], aug[piv]);
    const long double d = aug[col][col];
    for (int c = 0; c < 2 * ch; ++c) aug[col][c] /= d;
    for (int r = 0; r < ch; ++r) {
      if (r == col) continue;
      const long double f = aug[r][col];
      for (int c = 0; c < 2 * ch; ++c) aug[r][c] -= f * aug[col][c];
    }
  }
  std::vector<double> out(px);
  for (std::size_t p = 0; p < px; ++p) {
    long double q = 0.0;
    for (int a = 0; a < ch; ++a)
      for (int b = 0; b < ch; ++b) q += (img.data[p * ch + a] - mu[a]) * aug[a][ch + b] * (img.data[p * ch + b] - mu[b]);
    out[p] = static_cast<double>(q);
  }
  return out;
}

Outcome rx_oracle() {
  Rng rng = make_rng({0x4a});
  double worst = 0.0;
  int bad_count = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 1 + static_cast<int>(uniform(rng, 0, 4));
    const int h = std::max(1, std::min(16 / w, 1 + static_cast<int>(uniform(rng, 0, 4))));
    const int ch = 1 + trial % 3;
    Image img(w, h, ch);
    for (double& v : img.data) v = uniform(rng, 0.0, 1.0);
    const ScoreMap got = rx_scores(img, rx_stats(img));
    const std::vector<double> want = dense_scores(img);
    for (std::size_t p = 0; p < want.size(); ++p) {
      worst = std::max(worst, std::abs(got.data[p] - want[p]) / std::max(1.0, std::abs(want[p])));
    }
    const double t = uniform(rng, 0.01, 0.99);
    const std::size_t expected = static_cast<std::size_t>(std::floor((1.0 - t) * w * h + 1e-9));
    bad_count += top_fraction_mask(got, t).flagged() != expected;
  }
  return {worst <= 1e-9 && bad_count == 0,
          fmt("worst relative error %.3g, cardinality mismatches %d", worst, bad_count)};
}

Outcome geometry() {
  const double a = sa_diameter(5.15, 6);
  const double h = stack_height(6, 2.0);
  return {std::abs(a - 15.45) <= 1e-9 && h == 10.0, fmt("a = %.12f m, h = %.12f m", a, h)};
}

std::filesystem::path source_dir() { return SWARMSENSE_SOURCE_DIR; }

RunConfig desk_config(std::uint64_t seed) {
  RunConfig cfg = load_config(source_dir() / "configs/tracking_desk.json");
  cfg.seeds = Seeds::from(seed);
  return cfg;
}

std::vector<RunLog> desk_logs;

Outcome closed_loop() {
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunConfig cfg = desk_config(seed);
    desk_logs.push_back(run(cfg));
    const Metrics m = metrics(desk_logs.back());
    const bool seed_ok = m.precision && *m.precision >= 0.85 && m.recall && *m.recall >= 0.85 && m.mean_distance &&
                         *m.mean_distance <= 1.0 && m.mean_confidence && *m.mean_confidence > cfg.hyper.T;
    ok = ok && seed_ok;
    detail += fmt("[seed %d P %.1f%% R %.1f%% d %.2f m c %.2f] ", static_cast<int>(seed),
                  100.0 * m.precision.value_or(0), 100.0 * m.recall.value_or(0), m.mean_distance.value_or(-1),
                  m.mean_confidence.value_or(0));
  }
  const RunConfig cfg = desk_config(1);
  detail += fmt("target speed %.2f m/s, drone spacing %.2f m", max_segment_speed(cfg.scenario.target), cfg.hyper.c4);
  return {ok, detail};
}

Outcome branching() {
  if (desk_logs.empty()) return {false, "no logs"};
  int checked = 0, violations = 0;
  for (const RunLog& log : desk_logs) {
    const double T = log.config.hyper.T;
    for (std::size_t k = 1; k < log.records.size(); ++k) {
      const IterationRecord& r = log.records[k];
      if (r.branch == Branch::Guided) continue;
      const double c = log.records[k - 1].confidence;
      if (c < T) {
        ++checked;
        violations += r.branch != Branch::Diverge;
      } else if (c > T) {
        ++checked;
        violations += r.branch != Branch::Converge;
      }
    }
  }
  const std::string again = serialize(run(desk_config(1)), false);
  const bool identical = again == serialize(desk_logs.front(), false);
  return {violations == 0 && checked > 0 && identical,
          fmt("%d branch decisions checked, %d violations, repeated run %s", checked, violations,
              identical ? "byte-identical" : "differs")};
}

Outcome metric_identities() {
  const Metrics s3 = metrics_from_verdicts(48, 4, 4);
  const Metrics s1 = metrics_from_verdicts(46, 3, 0);
  const auto near = [](const std::optional<double>& v, double want) { return v && std::abs(*v - want) <= 0.0005; };
  const bool ok = near(s3.precision, 0.923) && near(s3.recall, 0.923) && near(s1.precision, 0.939) &&
                  near(s1.recall, 1.0);
  return {ok, fmt("48/4/4 -> %.2f%% / %.2f%%, 46/3/0 -> %.2f%% / %.2f%%", 100 * *s3.precision, 100 * *s3.recall,
                  100 * *s1.precision, 100 * *s1.recall)};
}

Outcome headless_service() {
  const auto out = std::filesystem::temp_directory_path() / fmt("swarmsense_accept_%u", std::random_device{}());
  const RunConfig cfg = desk_config(1);
  ServeOptions opts;
  opts.listen = "127.0.0.1:0";
  opts.out = out;
  opts.once = true;
  serve(cfg, opts);
  const RunLog served = load_runlog(out / "runlog.jsonl");
  std::filesystem::remove_all(out);
  const std::string a = serialize(served, false);
  const std::string b = serialize(desk_logs.empty() ? run(cfg) : desk_logs.front(), false);
  return {a == b, fmt("%zu records, logs %s", served.records.size(), a == b ? "bit-identical" : "differ")};
}

}  // namespace

int main() {
  report(1, "visibility semantics", 1, visibility);
  report(2, "parameter-integration accounting", 1, accounting);
  report(3, "drift robustness", 120, drift_robustness);
  report(4, "RX oracle", 30, rx_oracle);
  report(5, "geometry formulas", 1, geometry);
  report(6, "closed-loop tracking", 300, closed_loop);
  report(7, "branching and determinism", 120, branching);
  report(8, "metrics identities", 1, metric_identities);
  report(9, "headless service equivalence", 120, headless_service);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures == 0 ? 0 : 1;
}
