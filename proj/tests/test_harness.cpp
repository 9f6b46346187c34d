#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "support.h"
#include "swarmsense/random.h"

using namespace swarmsense;

namespace {

OrientedBox square(Vec2 c, double side) { return {c, {1.0, 0.0}, side, side}; }

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int count_files(const std::filesystem::path& dir, const std::string& suffix) {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    n += name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  }
  return n;
}

}  // namespace

TEST_CASE("distance to bbox") {
  const OrientedBox b = square({0, 0}, 2.0);
  CHECK(distance_to_bbox({0, 0}, b) == 0.0);
  CHECK(distance_to_bbox({3, 0}, b) == doctest::Approx(2.0));
  CHECK(distance_to_bbox({1.3, 1.4}, b) == doctest::Approx(0.5));
  CHECK(distance_to_bbox({0.5, -0.9}, b) == 0.0);
  const OrientedBox rotated{{10, 10}, unit_or_zero({1, 1}), 4.0, 2.0};
  CHECK(distance_to_bbox({10 + 3 / std::sqrt(2.0), 10 + 3 / std::sqrt(2.0)}, rotated) == doctest::Approx(1.0));
  CHECK(distance_to_bbox({10 - 2 / std::sqrt(2.0), 10 + 2 / std::sqrt(2.0)}, rotated) == doctest::Approx(1.0));
}

TEST_CASE("detection verdicts") {
  const OrientedBox b = square({5, 5}, 1.25);
  CHECK(classify_detection(Vec2{5.2, 4.9}, b, 3.0) == Verdict::Correct);
  CHECK(classify_detection(std::nullopt, b, 3.0) == Verdict::None);
  CHECK(classify_detection(Vec2{5.625 + 30.0, 5}, b, 3.0) == Verdict::Wrong);
  CHECK(classify_detection(Vec2{5.625 + 3.0, 5}, b, 3.0) == Verdict::Correct);
  for (Verdict v : {Verdict::Correct, Verdict::Wrong, Verdict::None}) CHECK(verdict_from_name(verdict_name(v)) == v);
}

TEST_CASE("metric identities") {
  const Metrics s3 = metrics_from_verdicts(48, 4, 4);
  CHECK(*s3.precision == doctest::Approx(0.923).epsilon(0.0006));
  CHECK(*s3.recall == doctest::Approx(0.923).epsilon(0.0006));
  const Metrics s1 = metrics_from_verdicts(46, 3, 0);
  CHECK(*s1.precision == doctest::Approx(0.939).epsilon(0.0006));
  CHECK(*s1.recall == 1.0);
  const Metrics all = metrics_from_verdicts(7, 0, 0);
  CHECK(*all.precision == 1.0);
  CHECK(*all.recall == 1.0);
  const Metrics empty = metrics_from_verdicts(0, 0, 5);
  CHECK_FALSE(empty.precision.has_value());
  CHECK(*empty.recall == 0.0);
  CHECK_FALSE(metrics_from_verdicts(0, 3, 0).recall.has_value());
  const Json j = metrics_to_json(metrics_from_verdicts(0, 0, 0));
  CHECK(j["precision"].is_null());
  CHECK(j["recall"].is_null());
}

TEST_CASE("metric identities on random verdict multisets") {
  Rng rng = make_rng({51});
  for (int trial = 0; trial < 500; ++trial) {
    RunLog log;
    int c = 0, w = 0, n = 0;
    double dist = 0.0, conf = 0.0;
    const int len = static_cast<int>(uniform(rng, 0, 60));
    for (int i = 0; i < len; ++i) {
      IterationRecord r;
      const double u = uniform(rng, 0, 1);
      r.verdict = u < 0.6 ? Verdict::Correct : u < 0.8 ? Verdict::Wrong : Verdict::None;
      r.confidence = uniform(rng, 0, 10);
      conf += r.confidence;
      if (r.verdict != Verdict::None) r.distance = uniform(rng, 0, r.verdict == Verdict::Correct ? 3 : 40);
      if (r.verdict == Verdict::Correct) {
        ++c;
        dist += *r.distance;
      }
      w += r.verdict == Verdict::Wrong;
      n += r.verdict == Verdict::None;
      log.records.push_back(r);
    }
    const Metrics m = metrics(log);
    CHECK(m.correct == c);
    CHECK(m.wrong == w);
    CHECK(m.none == n);
    CHECK(m.precision.has_value() == (c + w > 0));
    CHECK(m.recall.has_value() == (c + n > 0));
    if (m.precision) CHECK(*m.precision * (c + w) == doctest::Approx(c));
    if (m.recall) CHECK(*m.recall * (c + n) == doctest::Approx(c));
    CHECK(m.mean_distance.has_value() == (c > 0));
    if (c > 0) CHECK(*m.mean_distance == doctest::Approx(dist / c));
    if (len > 0) CHECK(*m.mean_confidence == doctest::Approx(conf / len));
  }
}

TEST_CASE("config json round trip") {
  RunConfig c = testing::small_config();
  c.hyper.delta_h = 2.0;
  c.hyper.c3_max = 4.0;
  c.hyper.advance = LineAdvance::ByS;
  c.blobs.max_axis_ratio = 3.0;
  c.plane = {0.5, 2.0, -1.0};
  c.sensor.heading = 15.0;
  const Json j = config_to_json(c);
  CHECK(config_from_json(j) == c);
  CHECK(j["rx"]["epsilon"] == "max(1e-6 * trace(K) / channels, 1e-12)");
  CHECK(config_to_json(config_from_json(j)).dump() == j.dump());

  RunConfig open = testing::small_config();
  open.blobs.max_area = std::numeric_limits<double>::infinity();
  const Json oj = config_to_json(open);
  CHECK(oj["blobs"]["max_area"].is_null());
  CHECK(config_from_json(oj) == open);
}

TEST_CASE("config reading errors name the key") {
  const auto key_of = [](Json doc) {
    try {
      config_from_json(doc);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  const Json good = config_to_json(testing::small_config());
  CHECK(key_of(good) == "<none>");
  Json j = good;
  j["swarm"]["c9"] = 1;
  CHECK(key_of(j) == "swarm.c9");
  j = good;
  j["extra"] = 1;
  CHECK(key_of(j) == "extra");
  j = good;
  j["rx"]["epsilon"] = 0.001;
  CHECK(key_of(j) == "rx.epsilon");
  j = good;
  j["run"]["iterations"] = 0;
  CHECK(key_of(j) == "run.iterations");
  j = good;
  j["scenario"]["forest_density"] = -5;
  CHECK(key_of(j) == "forest_density");
  j = good;
  j.erase("scenario");
  CHECK(key_of(j) == "scenario");
  j = good;
  j["run"]["altitude"] = 10;
  CHECK(key_of(j) == "run.altitude");
  j = good;
  j["swarm"]["c1"] = 3;
  j["swarm"]["c2"] = 1;
  CHECK(testing::category_of([&] { config_from_json(j); }) == ErrorCategory::InvalidArgument);
}

TEST_CASE("seed shorthand and defaults") {
  Json j = config_to_json(testing::small_config());
  j["run"]["seeds"] = 9;
  CHECK(config_from_json(j).seeds == Seeds{9, 10, 11});
  j["run"].erase("seeds");
  j["scenario"]["seed"] = 40;
  CHECK(config_from_json(j).seeds == Seeds{40, 41, 42});
  j["run"]["seeds"] = {{"drift", 3}};
  CHECK(config_from_json(j).seeds == Seeds{40, 3, 42});
}

TEST_CASE("load_config resolves scenario files") {
  testing::TempDir dir("cfg");
  const RunConfig c = testing::small_config();
  write_file(dir.path() / "scene.json", save_scenario(c.scenario));
  Json j = config_to_json(c);
  j.erase("scenario");
  j["scenario_file"] = "scene.json";
  write_file(dir.path() / "run.json", j.dump(2));
  CHECK(load_config(dir.path() / "run.json") == c);
  write_file(dir.path() / "bad.json", "{ nope");
  CHECK(testing::category_of([&] { load_config(dir.path() / "bad.json"); }) == ErrorCategory::Config);
  CHECK(testing::category_of([&] { load_config(dir.path() / "missing.json"); }) == ErrorCategory::Io);
}

TEST_CASE("shipped desk configuration loads") {
  const RunConfig c = load_config(std::filesystem::path(SWARMSENSE_SOURCE_DIR) / "configs/tracking_desk.json");
  CHECK(c.hyper.N == 6);
  CHECK(c.scenario.forest_density == 300.0);
  CHECK(c.iterations == 50);
  CHECK(c.integration.n == 10);
}

TEST_CASE("single iteration without target or occluders") {
  RunConfig c = testing::small_config(1);
  c.scenario.forest_density = 0.0;
  c.scenario.target.waypoints = {{0.0, {500.0, 500.0}}};
  c.scenario.bounds = {0, 0, 600, 600};
  c.hyper.N = 6;
  c.blobs.min_area = 1.0;
  c.blobs.max_axis_ratio = 4.0;
  const RunLog log = run(c);
  REQUIRE(log.records.size() == 1);
  const IterationRecord& r = log.records[0];
  CHECK(r.mode == SwarmMode::Scanning);
  CHECK(r.branch == Branch::Initial);
  CHECK(r.blobs.empty());
  CHECK(r.confidence == 0.0);
  CHECK(r.verdict == Verdict::None);
  CHECK_FALSE(r.estimate.has_value());
  CHECK(r.drones.size() == 6);
  CHECK(r.reference_confidences.size() == 6);
}

TEST_CASE("six-drone run with wide spacing") {
  RunConfig c = testing::small_config(4);
  c.hyper.N = 6;
  c.hyper.c1 = 1.7;
  c.hyper.c2 = 3.42;
  c.hyper.c3 = 3.0;
  c.hyper.c4 = 5.15;
  c.hyper.c5 = 0.3;
  c.hyper.s = 5.15;
  c.hyper.T = 2.0;
  const RunLog log = run(c);
  REQUIRE(log.records.size() == 4);
  for (int k = 0; k < 4; ++k) {
    const IterationRecord& r = log.records[k];
    CHECK(r.iteration == k);
    CHECK(r.time == doctest::Approx(k * c.iteration_seconds));
    CHECK(r.drones.size() == 6);
    std::vector<Vec2> xy;
    for (const auto& d : r.drones) {
      xy.push_back(d.pose_true.position.xy());
      CHECK(std::abs(d.heading_error) <= c.sensor.drift_bound);
      CHECK(d.pose_reported.heading == doctest::Approx(d.pose_true.heading + d.heading_error));
    }
    CHECK(min_pairwise_distance(xy) >= c.hyper.c4 - 1e-6);
    CHECK((r.branch == Branch::Initial) == (k == 0));
    if (k > 0) {
      const bool prior = log.records[k - 1].confidence > c.hyper.T;
      CHECK(r.branch == (prior ? Branch::Converge : Branch::Diverge));
    }
    CHECK(r.estimate.has_value() == (r.confidence > c.hyper.T && !r.blobs.empty()));
    for (std::size_t b = 1; b < r.blobs.size(); ++b) CHECK(r.blobs[b - 1].relevance >= r.blobs[b].relevance);
  }
}

TEST_CASE("runs are deterministic per seed") {
  const RunConfig c = testing::small_config(3);
  const RunLog a = run(c);
  const RunLog b = run(c);
  CHECK(serialize(a, false) == serialize(b, false));
  RunConfig d = c;
  d.seeds.drift = 99;
  CHECK(serialize(run(d), false) != serialize(a, false));
}

TEST_CASE("run log round trip") {
  const RunLog log = run(testing::small_config(3));
  const std::string text = serialize(log);
  const RunLog parsed = parse_runlog(text);
  CHECK(parsed.config == log.config);
  REQUIRE(parsed.records.size() == log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) CHECK(parsed.records[i] == log.records[i]);
  CHECK(serialize(parsed) == text);
  const auto lines = split_lines(text);
  CHECK(lines.size() == 4);
  CHECK(Json::parse(lines[0])["type"] == "header");
  CHECK(Json::parse(lines[1])["type"] == "iteration");
  CHECK(Json::parse(lines[1]).contains("wall_ms"));
  CHECK_FALSE(Json::parse(split_lines(serialize(log, false))[1]).contains("wall_ms"));
}

TEST_CASE("malformed logs are replay errors") {
  CHECK(testing::category_of([] { parse_runlog(""); }) == ErrorCategory::Replay);
  CHECK(testing::category_of([] { parse_runlog("{\"type\":\"iteration\"}\n"); }) == ErrorCategory::Replay);
  CHECK(testing::category_of([] { parse_runlog("not json\n"); }) == ErrorCategory::Replay);
  const std::string header = header_line(testing::small_config());
  CHECK(testing::category_of([&] { parse_runlog(header + "\n" + header + "\n"); }) == ErrorCategory::Replay);
}

TEST_CASE("replay verifies every record") {
  const RunLog log = run(testing::small_config(3));
  const RunLog again = replay(parse_runlog(serialize(log)));
  CHECK(metrics(again) == metrics(log));

  RunLog tampered = log;
  tampered.records[1].confidence += 1e-9;
  CHECK(testing::category_of([&] { replay(tampered); }) == ErrorCategory::Replay);
  RunLog shorter = log;
  shorter.records.pop_back();
  CHECK(testing::category_of([&] { replay(shorter); }) == ErrorCategory::Replay);
  RunLog wall = log;
  wall.records[0].wall_ms = 12345.0;
  CHECK_NOTHROW(replay(wall));
}

TEST_CASE("export writes the artifact set") {
  testing::TempDir dir("export");
  const RunLog log = run(testing::small_config(3), true);
  REQUIRE(log.artifacts.size() == 3);
  const auto files = export_run(log, dir.path() / "out");
  const auto out = dir.path() / "out";
  CHECK(count_files(out, "_anomaly.pgm") == 3);
  CHECK(count_files(out, "_integral.pgm") == 3);
  CHECK(count_files(out, "_anomaly.json") == 3);
  CHECK(std::filesystem::exists(out / "blobs.csv"));
  CHECK(std::filesystem::exists(out / "metrics.json"));
  CHECK(files.size() == 13);

  const auto series = split_lines(read_file(out / "confidence_series.csv"));
  REQUIRE(series.size() == 3);
  for (const auto& row : series) CHECK(std::count(row.begin(), row.end(), ',') == 2);
  CHECK(series[0] == "0,1,2");
  CHECK(series[2] == "2,2,2");

  const Image img = decode_pnm(read_file(out / "iter_0000_anomaly.pgm"));
  CHECK(img.width == 64);
  CHECK(img.height == 64);
  const Json meta = Json::parse(read_file(out / "iter_0001_anomaly.json"));
  CHECK(meta["layers"] == (3 + 3) * 4);
  CHECK(meta["drones"] == 3);

  const RunLog back = load_runlog(out / "runlog.jsonl");
  CHECK(metrics(replay(back)) == metrics(log));
  const Json m = Json::parse(read_file(out / "metrics.json"));
  CHECK(m["correct"] == metrics(log).correct);

  const auto blob_lines = split_lines(read_file(out / "blobs.csv"));
  std::size_t blobs = 0;
  for (const auto& r : log.records) blobs += r.blobs.size();
  CHECK(blob_lines.size() == blobs + 1);
}

TEST_CASE("export surfaces I/O failures with the path") {
  testing::TempDir dir("export_fail");
  write_file(dir.path() / "file", "x");
  const RunLog log = run(testing::small_config(1));
  try {
    export_run(log, dir.path() / "file" / "sub");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Io);
    CHECK(std::string(e.what()).find("file") != std::string::npos);
  }
}

TEST_CASE("runner commands") {
  RunConfig c = testing::small_config(6);
  Runner r(c);
  r.step();
  r.set_guide({70.0, 60.0});
  const IterationRecord g = r.step();
  CHECK(g.branch == Branch::Guided);
  CHECK(g.mode == SwarmMode::Guided);
  CHECK(r.swarm().centroid().x == doctest::Approx(70.0));
  CHECK(r.swarm().centroid().y == doctest::Approx(60.0));
  const IterationRecord held = r.step();  // guide has not moved
  CHECK(held.branch != Branch::Guided);
  r.release();
  r.step();
  CHECK_FALSE(r.swarm().guide.has_value());

  Hyperparameters h = c.hyper;
  h.N = 4;
  CHECK(testing::category_of([&] { r.set_hyperparameters(h); }) == ErrorCategory::InvalidArgument);
  h = c.hyper;
  h.c1 = 3.0;
  h.c2 = 1.0;
  CHECK_THROWS(r.set_hyperparameters(h));
  CHECK(r.config().hyper == c.hyper);
  h = c.hyper;
  h.c3 = 0.25;
  r.set_hyperparameters(h);
  CHECK(r.config().hyper.c3 == 0.25);
  r.step();
  r.step();
  CHECK(r.done());
  CHECK(testing::category_of([&] { r.step(); }) == ErrorCategory::InvalidArgument);
}

TEST_CASE("module errors carry the iteration index") {
  RunConfig c = testing::small_config(2);
  c.plane.theta = 89.9;  // rays graze the focal plane
  try {
    run(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Projection);
    CHECK(std::string(e.what()).rfind("iteration 0", 0) == 0);
  }
}
