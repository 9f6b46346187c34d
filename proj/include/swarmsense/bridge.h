#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "swarmsense/harness.h"

namespace swarmsense {

// Partial hyperparameter update; absent fields keep their current value.
struct ParamPatch {
  std::optional<double> c1, c2, c3, c4, c5, s, T;

  Hyperparameters apply(Hyperparameters h) const;
  bool operator==(const ParamPatch&) const = default;
};

struct CmdGuide {
  Vec2 xy;
  bool operator==(const CmdGuide&) const = default;
};
struct CmdRelease {
  bool operator==(const CmdRelease&) const = default;
};
struct CmdPause {
  bool operator==(const CmdPause&) const = default;
};
struct CmdResume {
  bool operator==(const CmdResume&) const = default;
};
struct CmdSetParams {
  ParamPatch patch;
  bool operator==(const CmdSetParams&) const = default;
};
struct CmdReset {
  std::uint64_t seed = 0;
  bool operator==(const CmdReset&) const = default;
};

using Command = std::variant<CmdGuide, CmdRelease, CmdPause, CmdResume, CmdSetParams, CmdReset>;

const char* command_name(const Command& c);

// Throws Error(InvalidArgument) describing what is wrong with the message.
Command parse_command(const std::string& text);

Json error_message(const std::string& reason);

// Unbounded FIFO with concurrent push and single-consumer drain.
class CommandQueue {
 public:
  void push(Command c);
  std::deque<Command> drain();
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::deque<Command> q_;
};

constexpr int kThumbnailSide = 256;

Json state_update_json(int session_iter, const IterationRecord& rec, double T, const IntegralImage& anomaly,
                       bool include_truth);

// One live run: commands are queued by any thread and applied by tick() at the
// iteration boundary, in arrival order.
class Session {
 public:
  // iter is the session iteration of a state update, or -1 for notices.
  using Sink = std::function<void(int iter, const std::string& message)>;

  // keep_artifacts retains per-iteration images in log() for export.
  explicit Session(RunConfig cfg, bool include_truth = false, bool keep_artifacts = false);

  // Parses and pre-validates a console message. Returns an error reply, or
  // nullopt when the command was queued.
  std::optional<std::string> submit(const std::string& text);
  void enqueue(Command c);

  // Applies queued commands, then runs one iteration unless paused or done.
  // Returns true when an iteration ran and an update was published.
  bool tick();

  void set_sink(Sink sink);
  std::optional<std::pair<int, std::string>> latest() const;

  bool paused() const;
  bool done() const;
  int session_iteration() const;
  Hyperparameters hyperparameters() const;
  const RunLog& log() const { return log_; }
  const Runner& runner() const { return *runner_; }

 private:
  void apply(const Command& c);

  RunConfig base_;
  bool include_truth_;
  bool keep_artifacts_;
  std::unique_ptr<Runner> runner_;
  RunLog log_;
  CommandQueue queue_;
  Sink sink_;
  int session_iter_ = 0;
  bool paused_ = false;
  mutable std::mutex mu_;  // guards latest_, paused_, hyper_ snapshot and sink_
  std::optional<std::pair<int, std::string>> latest_;
  Hyperparameters hyper_;
};

struct ServeOptions {
  std::string listen = "127.0.0.1:8765";
  std::optional<std::filesystem::path> out;
  int interval_ms = 0;
  bool once = false;  // return once the configured iterations are done
  bool include_truth = false;
};

// "host:port"; port 0 picks a free port. Throws Error(InvalidArgument).
std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& addr);

// Runs the session loop on the calling thread and serves consoles over WebSocket.
// on_listening receives the bound port. Returns when the run is complete
// (with once) or after request_stop().
void serve(const RunConfig& cfg, const ServeOptions& opts, const std::function<void(std::uint16_t)>& on_listening = {});

void request_stop();

}  // namespace swarmsense
