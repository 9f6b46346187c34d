#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "swarmsense/bridge.h"
#include "swarmsense/error.h"
#include "swarmsense/harness.h"

using namespace swarmsense;

namespace {

// SWARMSENSE_LOG_LEVEL: trace, debug, info, warn, error, critical or off.
void init_logging() {
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(spdlog::stderr_color_mt("swarmsense"));
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("SWARMSENSE_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(lvl));
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
  return buf;
}

std::string metres(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

void print_metrics(const Metrics& m) {
  std::cout << "iterations      " << (m.correct + m.wrong + m.none) << "\n"
            << "correct/wrong/none " << m.correct << "/" << m.wrong << "/" << m.none << "\n"
            << "precision       " << percent(m.precision) << "\n"
            << "recall          " << percent(m.recall) << "\n"
            << "mean distance   " << metres(m.mean_distance) << " m\n"
            << "mean confidence " << metres(m.mean_confidence) << "\n";
}

void apply_overrides(RunConfig& cfg, const std::optional<std::uint64_t>& seed, const std::optional<int>& iterations) {
  if (seed) cfg.seeds = Seeds::from(*seed);
  if (iterations) cfg.iterations = *iterations;
  validate(cfg);
}

extern "C" void on_signal(int) { request_stop(); }

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"swarm synthetic-aperture search simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, log_path, listen = "127.0.0.1:8765";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  int interval_ms = 0;
  bool once = false, truth = false;

  auto* run_cmd = app.add_subcommand("run", "run a closed-loop experiment and export its artifacts");
  run_cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--seed", seed, "sets world=k, drift=k+1, pso=k+2");
  run_cmd->add_option("--iterations", iterations, "iteration count")->check(CLI::PositiveNumber);

  auto* replay_cmd = app.add_subcommand("replay", "rerun a log's configuration and verify every record");
  replay_cmd->add_option("--log", log_path, "runlog.jsonl")->required();

  auto* metrics_cmd = app.add_subcommand("metrics", "print detection metrics of a log");
  metrics_cmd->add_option("--log", log_path, "runlog.jsonl")->required();

  auto* serve_cmd = app.add_subcommand("serve", "run a live session for operator consoles over WebSocket");
  serve_cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
  serve_cmd->add_option("--listen", listen, "host:port")->required();
  serve_cmd->add_option("--out", out_dir, "export the run here once it completes");
  serve_cmd->add_option("--seed", seed, "sets world=k, drift=k+1, pso=k+2");
  serve_cmd->add_option("--iterations", iterations, "iteration count")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--interval-ms", interval_ms, "pause between iterations")->check(CLI::NonNegativeNumber);
  serve_cmd->add_flag("--once", once, "exit when the configured iterations are done");
  serve_cmd->add_flag("--truth", truth, "include target ground truth in state updates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) {
      RunConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed, iterations);
      spdlog::info("running {} iterations, seeds {}/{}/{}", cfg.iterations, cfg.seeds.world, cfg.seeds.drift,
                   cfg.seeds.pso);
      Runner runner(cfg);
      RunLog log;
      log.config = cfg;
      while (!runner.done()) {
        IterationArtifacts art;
        log.records.push_back(runner.step(&art));
        log.artifacts.push_back(std::move(art));
        const IterationRecord& r = log.records.back();
        spdlog::debug("iter {} {} c={:.3f} {} ({:.0f} ms)", r.iteration, branch_name(r.branch), r.confidence,
                      verdict_name(r.verdict), r.wall_ms);
      }
      const auto files = export_run(log, out_dir);
      spdlog::info("wrote {} files to {}", files.size(), out_dir);
      print_metrics(metrics(log));
    } else if (*replay_cmd) {
      const RunLog log = load_runlog(log_path);
      replay(log);
      std::cout << "replay identical: " << log.records.size() << " records\n";
      print_metrics(metrics(log));
    } else if (*metrics_cmd) {
      print_metrics(metrics(load_runlog(log_path)));
    } else if (*serve_cmd) {
      RunConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed, iterations);
      ServeOptions opts;
      opts.listen = listen;
      if (!out_dir.empty()) opts.out = out_dir;
      opts.interval_ms = interval_ms;
      opts.once = once;
      opts.include_truth = truth;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      serve(cfg, opts, [](std::uint16_t port) { spdlog::info("listening on port {}", port); });
    }
  } catch (const Error& e) {
    spdlog::error("{} error: {}", category_name(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
  return 0;
}
