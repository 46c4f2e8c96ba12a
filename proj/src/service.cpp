#include "sitescout/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include "sitescout/documents.hpp"
#include "sitescout/error.hpp"

namespace sitescout {

void EventHub::publish(std::string document) {
  {
    std::lock_guard lock(mutex_);
    events_.emplace_back(next_++, std::move(document));
    while (events_.size() > capacity_) events_.pop_front();
  }
  cv_.notify_all();
}

std::vector<std::pair<std::uint64_t, std::string>> EventHub::wait_after(std::uint64_t after,
                                                                         std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || next_ - 1 > after; });
  std::vector<std::pair<std::uint64_t, std::string>> out;
  for (const auto& e : events_) {
    if (e.first > after) out.push_back(e);
  }
  return out;
}

std::uint64_t EventHub::last_seq() const {
  std::lock_guard lock(mutex_);
  return next_ - 1;
}

void EventHub::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventHub::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownRequest: return 404;
    case ErrorCode::IllegalTransition: return 409;
    default: return 400;
  }
}

void send_error(httplib::Response& res, const Error& e) {
  res.status = status_for(e.code());
  res.set_content(error_document(to_string(e.code()), e.what()), "application/json");
}

}  // namespace

struct Service::Impl {
  Mission& mission;
  ServiceOptions options;
  httplib::Server server;
  EventHub hub;
  std::thread server_thread;
  std::thread loop_thread;
  std::atomic<bool> running{false};
  std::string groundtruth;

  Impl(Mission& m, ServiceOptions o) : mission(m), options(std::move(o)) {
    groundtruth = groundtruth_document(mission.ground_truth());
    mission.set_listener([this](const MissionEvent& e) { hub.publish(event_document(e)); });
    routes();
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/state", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(snapshot_document(*mission.snapshot()), "application/json");
    });
    server.Get("/api/map", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(map_document(*mission.snapshot()->merged), "application/json");
    });
    server.Get("/api/groundtruth", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(groundtruth, "application/json");
    });
    server.Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
      std::uint64_t after = 0;
      const std::string from =
          req.has_header("Last-Event-ID") ? req.get_header_value("Last-Event-ID") : req.get_param_value("after");
      if (!from.empty()) {
        try {
          after = std::stoull(from);
        } catch (const std::exception&) {
          res.status = 400;
          res.set_content(error_document("InvalidCommand", "bad event id"), "application/json");
          return;
        }
      }
      auto cursor = std::make_shared<std::uint64_t>(after);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
        if (!running) return false;
        const auto batch = hub.wait_after(*cursor, std::chrono::milliseconds(500));
        std::string chunk;
        for (const auto& [seq, doc] : batch) {
          chunk += "id: " + std::to_string(seq) + "\nevent: mission\ndata: " + doc + "\n\n";
          *cursor = seq;
        }
        if (chunk.empty()) chunk = ": keepalive\n\n";
        if (!sink.write(chunk.data(), chunk.size())) return false;
        if (hub.closed()) {
          sink.done();
          return false;
        }
        return true;
      });
    });
    server.Post("/api/command", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const OperatorCommand c = parse_command(req.body);
        mission.submit(c);
        res.status = 202;
        nlohmann::ordered_json j;
        j["schema"] = kDocumentSchemaVersion;
        j["accepted"] = true;
        j["command"] = nlohmann::ordered_json::parse(command_document(c));
        j["tick"] = mission.snapshot()->tick;
        res.set_content(j.dump(), "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      }
    });
    server.Post(R"(/api/help/([^/]+)/grasp)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      try {
        const Point2 p = parse_grasp(req.body);
        mission.submit_grasp(id, p);
        res.status = 202;
        nlohmann::ordered_json j;
        j["schema"] = kDocumentSchemaVersion;
        j["accepted"] = true;
        j["request_id"] = id;
        j["point"] = {p.x, p.y};
        res.set_content(j.dump(), "application/json");
      } catch (const Error& e) {
        send_error(res, e);
      }
    });
    if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
  }

  void loop() {
    const auto period = std::chrono::milliseconds(options.tick_ms);
    auto next = std::chrono::steady_clock::now();
    while (running) {
      if (mission.step()) {
        const auto snap = mission.snapshot();
        nlohmann::ordered_json j;
        j["tick"] = snap->tick;
        j["type"] = "tick";
        j["phi"] = snap->phi;
        j["verdict"] = std::string(to_string(snap->verdict));
        j["outcome"] = std::string(to_string(snap->outcome));
        j["schema"] = kDocumentSchemaVersion;
        hub.publish(j.dump());
      }
      next += period;
      const auto now = std::chrono::steady_clock::now();
      if (next < now) next = now;
      std::this_thread::sleep_until(next);
    }
  }
};

Service::Service(Mission& mission, ServiceOptions options)
    : impl_(std::make_unique<Impl>(mission, std::move(options))) {}

Service::~Service() { stop(); }

int Service::start() {
  Impl& s = *impl_;
  if (s.options.port == 0) {
    port_ = s.server.bind_to_any_port(s.options.host);
  } else {
    port_ = s.server.bind_to_port(s.options.host, s.options.port) ? s.options.port : -1;
  }
  if (port_ < 0) throw Error(ErrorCode::InvalidCommand, "cannot bind " + s.options.host + ":" + std::to_string(s.options.port));
  s.running = true;
  s.server_thread = std::thread([&s] { s.server.listen_after_bind(); });
  s.loop_thread = std::thread([&s] { s.loop(); });
  s.server.wait_until_ready();
  return port_;
}

void Service::stop() {
  Impl& s = *impl_;
  const bool was = s.running.exchange(false);
  s.hub.close();
  if (was) s.server.stop();
  if (s.loop_thread.joinable()) s.loop_thread.join();
  if (s.server_thread.joinable()) s.server_thread.join();
}

void Service::wait() {
  Impl& s = *impl_;
  if (s.server_thread.joinable()) s.server_thread.join();
  stop();
}

}  // namespace sitescout
