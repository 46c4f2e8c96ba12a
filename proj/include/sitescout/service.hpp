#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sitescout/mission.hpp"

namespace sitescout {

// Bounded history of serialized mission events for the push stream.
class EventHub {
 public:
  explicit EventHub(std::size_t capacity = 4096) : capacity_(capacity) {}

  void publish(std::string document);
  // Events with sequence number > `after`, waiting up to `timeout` for one.
  std::vector<std::pair<std::uint64_t, std::string>> wait_after(std::uint64_t after, std::chrono::milliseconds timeout);
  std::uint64_t last_seq() const;
  void close();
  bool closed() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::pair<std::uint64_t, std::string>> events_;
  std::uint64_t next_ = 1;
  bool closed_ = false;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  int tick_ms = 100;
  std::optional<std::filesystem::path> static_dir;
};

// HTTP front end plus the thread that steps the mission.
class Service {
 public:
  Service(Mission& mission, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and starts both threads. Returns the bound port.
  int start();
  void stop();
  // Blocks until stop() or the server exits.
  void wait();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace sitescout
