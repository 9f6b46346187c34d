#include "swarmsense/bridge.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "swarmsense/error.h"

namespace swarmsense {

namespace {

std::atomic<bool> g_stop{false};

Error bad_command(const std::string& why) { return Error(ErrorCategory::InvalidArgument, why); }

double finite_number(const Json& j, const char* key) {
  if (!j.contains(key)) throw bad_command(std::string("missing field ") + key);
  const Json& v = j.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) throw bad_command(std::string(key) + " must be a finite number");
  return v.get<double>();
}

void only_keys(const Json& j, std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    if (item.key() == "type") continue;
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw bad_command("unknown field " + item.key());
  }
}

}  // namespace

Hyperparameters ParamPatch::apply(Hyperparameters h) const {
  if (c1) h.c1 = *c1;
  if (c2) h.c2 = *c2;
  if (c3) h.c3 = *c3;
  if (c4) h.c4 = *c4;
  if (c5) h.c5 = *c5;
  if (s) h.s = *s;
  if (T) h.T = *T;
  return h;
}

const char* command_name(const Command& c) {
  static constexpr const char* kNames[] = {"guide", "release", "pause", "resume", "set_params", "reset"};
  return kNames[c.index()];
}

Command parse_command(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error&) {
    throw bad_command("message is not valid JSON");
  }
  if (!j.is_object()) throw bad_command("message must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) throw bad_command("missing string field type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "guide") {
    only_keys(j, {"x", "y"});
    return CmdGuide{{finite_number(j, "x"), finite_number(j, "y")}};
  }
  if (type == "release") {
    only_keys(j, {});
    return CmdRelease{};
  }
  if (type == "pause") {
    only_keys(j, {});
    return CmdPause{};
  }
  if (type == "resume") {
    only_keys(j, {});
    return CmdResume{};
  }
  if (type == "set_params") {
    only_keys(j, {"c1", "c2", "c3", "c4", "c5", "s", "T"});
    ParamPatch p;
    auto opt = [&](const char* key, std::optional<double>& field) {
      if (j.contains(key)) field = finite_number(j, key);
    };
    opt("c1", p.c1);
    opt("c2", p.c2);
    opt("c3", p.c3);
    opt("c4", p.c4);
    opt("c5", p.c5);
    opt("s", p.s);
    opt("T", p.T);
    return CmdSetParams{p};
  }
  if (type == "reset") {
    only_keys(j, {"seed"});
    if (!j.contains("seed")) throw bad_command("missing field seed");
    const Json& s = j.at("seed");
    if (!s.is_number_unsigned()) throw bad_command("seed must be a non-negative integer");
    return CmdReset{s.get<std::uint64_t>()};
  }
  throw bad_command("unknown command type " + type);
}

Json error_message(const std::string& reason) { return Json{{"type", "error"}, {"reason", reason}}; }

void CommandQueue::push(Command c) {
  std::lock_guard lock(mu_);
  q_.push_back(std::move(c));
}

std::deque<Command> CommandQueue::drain() {
  std::lock_guard lock(mu_);
  std::deque<Command> out;
  out.swap(q_);
  return out;
}

std::size_t CommandQueue::size() const {
  std::lock_guard lock(mu_);
  return q_.size();
}

Json state_update_json(int session_iter, const IterationRecord& rec, double T, const IntegralImage& anomaly,
                       bool include_truth) {
  Json drones = Json::array();
  for (std::size_t i = 0; i < rec.drones.size(); ++i) {
    const Pose& p = rec.drones[i].pose_reported;
    drones.push_back({{"id", i}, {"x", p.position.x}, {"y", p.position.y}, {"z", p.position.z}, {"heading", p.heading}});
  }
  Json blob = nullptr;
  if (!rec.blobs.empty()) {
    const BlobRecord& b = rec.blobs.front();
    blob = {{"x", b.ground.x},
            {"y", b.ground.y},
            {"relevance", b.relevance},
            {"bbox", {b.bbox.min_x, b.bbox.min_y, b.bbox.max_x, b.bbox.max_y}}};
  }
  const Image thumb = downscale(anomaly.values, kThumbnailSide);
  Json j{{"type", "state"},
         {"iter", session_iter},
         {"drones", drones},
         {"mode", mode_name(rec.mode)},
         {"confidence", rec.confidence},
         {"T", T},
         {"verdict", verdict_name(rec.verdict)},
         {"blob", blob},
         {"image", {{"w", thumb.width}, {"h", thumb.height}, {"encoding", "pgm-base64"},
                    {"data", base64_encode(encode_pnm(thumb))}}},
         {"timing_ms", rec.wall_ms}};
  if (include_truth) {
    j["target"] = {{"x", rec.gt_center.x}, {"y", rec.gt_center.y}};
  }
  return j;
}

Session::Session(RunConfig cfg, bool include_truth, bool keep_artifacts)
    : base_(std::move(cfg)), include_truth_(include_truth), keep_artifacts_(keep_artifacts) {
  runner_ = std::make_unique<Runner>(base_);
  log_.config = base_;
  hyper_ = base_.hyper;
}

std::optional<std::string> Session::submit(const std::string& text) {
  Command c;
  try {
    c = parse_command(text);
    if (const auto* sp = std::get_if<CmdSetParams>(&c)) {
      // Rejected whole when the merged set violates an admissibility rule.
      validate(sp->patch.apply(hyperparameters()));
    }
  } catch (const Error& e) {
    return error_message(e.what()).dump();
  }
  enqueue(std::move(c));
  return std::nullopt;
}

void Session::enqueue(Command c) { queue_.push(std::move(c)); }

void Session::apply(const Command& c) {
  if (const auto* g = std::get_if<CmdGuide>(&c)) {
    runner_->set_guide(g->xy);
  } else if (std::holds_alternative<CmdRelease>(c)) {
    runner_->release();
  } else if (std::holds_alternative<CmdPause>(c)) {
    std::lock_guard lock(mu_);
    paused_ = true;
  } else if (std::holds_alternative<CmdResume>(c)) {
    std::lock_guard lock(mu_);
    paused_ = false;
  } else if (const auto* sp = std::get_if<CmdSetParams>(&c)) {
    try {
      runner_->set_hyperparameters(sp->patch.apply(runner_->config().hyper));
      std::lock_guard lock(mu_);
      hyper_ = runner_->config().hyper;
    } catch (const Error& e) {
      Sink sink;
      {
        std::lock_guard lock(mu_);
        sink = sink_;
      }
      if (sink) sink(-1, error_message(std::string("set_params rejected: ") + e.what()).dump());
    }
  } else if (const auto* r = std::get_if<CmdReset>(&c)) {
    RunConfig cfg = base_;
    cfg.seeds = Seeds::from(r->seed);
    runner_ = std::make_unique<Runner>(cfg);
    log_ = RunLog{};
    log_.config = cfg;
    std::lock_guard lock(mu_);
    hyper_ = cfg.hyper;
  }
}

bool Session::tick() {
  for (const Command& c : queue_.drain()) apply(c);
  if (paused() || runner_->done()) return false;
  IterationArtifacts art;
  IterationRecord rec = runner_->step(&art);
  const int iter = session_iter_++;
  const std::string update =
      state_update_json(iter, rec, runner_->config().hyper.T, art.anomaly, include_truth_).dump();
  log_.records.push_back(std::move(rec));
  if (keep_artifacts_) log_.artifacts.push_back(std::move(art));
  Sink sink;
  {
    std::lock_guard lock(mu_);
    latest_ = std::make_pair(iter, update);
    sink = sink_;
  }
  if (sink) sink(iter, update);
  return true;
}

void Session::set_sink(Sink sink) {
  std::lock_guard lock(mu_);
  sink_ = std::move(sink);
}

std::optional<std::pair<int, std::string>> Session::latest() const {
  std::lock_guard lock(mu_);
  return latest_;
}

bool Session::paused() const {
  std::lock_guard lock(mu_);
  return paused_;
}

bool Session::done() const { return runner_->done(); }

int Session::session_iteration() const { return session_iter_; }

Hyperparameters Session::hyperparameters() const {
  std::lock_guard lock(mu_);
  return hyper_;
}

std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw Error(ErrorCategory::InvalidArgument, "listen address must be host:port, got " + addr);
  }
  const std::string host = addr.substr(0, colon);
  const std::string port = addr.substr(colon + 1);
  std::size_t used = 0;
  unsigned long p = 0;
  try {
    p = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || p > 65535) throw Error(ErrorCategory::InvalidArgument, "bad port in " + addr);
  return {host, static_cast<std::uint16_t>(p)};
}

namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Server;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Server& server) : ws_(std::move(socket)), server_(server) {}

  void start();
  void send(int iter, std::shared_ptr<const std::string> msg);

 private:
  void read();
  void write();

  websocket::stream<tcp::socket> ws_;
  Server& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> out_;
  int last_iter_ = -1;
  bool open_ = false;
};

// All handlers run on the single I/O thread.
class Server {
 public:
  Server(net::io_context& ioc, const tcp::endpoint& ep, Session& session)
      : ioc_(ioc), acceptor_(ioc), session_(session) {
    beast::error_code ec;
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCategory::Io, "cannot listen on " + ep.address().to_string() + ":" +
                                               std::to_string(ep.port()) + ": " + ec.message());
  }

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

  void accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), *this)->start();
      accept();
    });
  }

  void broadcast(int iter, std::shared_ptr<const std::string> msg) {
    net::post(ioc_, [this, iter, msg] {
      for (const auto& c : conns_) c->send(iter, msg);
    });
  }

  void joined(const std::shared_ptr<Connection>& c) {
    conns_.insert(c);
    if (auto latest = session_.latest()) c->send(latest->first, std::make_shared<const std::string>(latest->second));
  }
  void left(const std::shared_ptr<Connection>& c) { conns_.erase(c); }
  void close() {
    beast::error_code ec;
    acceptor_.close(ec);
    conns_.clear();
  }

  Session& session() { return session_; }

 private:
  net::io_context& ioc_;
  tcp::acceptor acceptor_;
  Session& session_;
  std::set<std::shared_ptr<Connection>> conns_;
};

void Connection::start() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->server_.joined(self);
    self->read();
  });
}

void Connection::read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->open_ = false;
      self->server_.left(self);
      return;
    }
    const std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    auto reply = self->server_.session().submit(text);
    if (!reply) {
      reply = Json{{"type", "ack"}, {"command", command_name(parse_command(text))}}.dump();
    }
    self->send(-1, std::make_shared<const std::string>(*reply));
    self->read();
  });
}

void Connection::send(int iter, std::shared_ptr<const std::string> msg) {
  if (!open_) return;
  if (iter >= 0) {
    if (iter <= last_iter_) return;
    last_iter_ = iter;
  }
  out_.push_back(std::move(msg));
  if (out_.size() == 1) write();
}

void Connection::write() {
  ws_.text(true);
  ws_.async_write(net::buffer(*out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->open_ = false;
      self->out_.clear();
      self->server_.left(self);
      return;
    }
    self->out_.pop_front();
    if (!self->out_.empty()) self->write();
  });
}

}  // namespace

void request_stop() { g_stop.store(true); }

void serve(const RunConfig& cfg, const ServeOptions& opts, const std::function<void(std::uint16_t)>& on_listening) {
  g_stop.store(false);
  const auto [host, port] = parse_listen_address(opts.listen);
  beast::error_code ec;
  const auto address = net::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) throw Error(ErrorCategory::InvalidArgument, "bad listen host " + host);

  Session session(cfg, opts.include_truth, opts.out.has_value());
  net::io_context ioc;
  Server server(ioc, {address, port}, session);
  session.set_sink([&server](int iter, const std::string& msg) {
    server.broadcast(iter, std::make_shared<const std::string>(msg));
  });
  server.accept();
  std::thread io([&ioc] { ioc.run(); });
  if (on_listening) on_listening(server.port());

  bool exported = false;
  try {
    while (!g_stop.load()) {
      if (session.tick()) {
        exported = false;
        if (opts.interval_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(opts.interval_ms));
        continue;
      }
      if (session.done()) {
        if (opts.out && !exported) {
          export_run(session.log(), *opts.out);
          exported = true;
        }
        if (opts.once) break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  } catch (...) {
    net::post(ioc, [&server] { server.close(); });
    ioc.stop();
    io.join();
    throw;
  }
  net::post(ioc, [&server] { server.close(); });
  // Let queued updates flush briefly before shutting the loop down.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  ioc.stop();
  io.join();
}

}  // namespace swarmsense
