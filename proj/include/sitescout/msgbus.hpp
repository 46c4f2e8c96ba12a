#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sitescout/messages.hpp"

namespace sitescout {

struct Envelope {
  std::string topic;
  std::string publisher;
  std::uint64_t seq = 0;  // per (publisher, topic), starting at 1
  Payload payload;
};

struct DeliveryReceipt {
  std::uint64_t seq = 0;
  std::size_t delivered = 0;  // subscriber count at publish time
};

enum class TopicRole { Publisher, Subscriber };

class MasterRegistry;

// Subscriber-side FIFO. Thread-safe.
class Inbox {
 public:
  void push(Envelope e);
  std::optional<Envelope> pop();
  std::vector<Envelope> drain();
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::deque<Envelope> queue_;
};

// Returned by open_topic. A publisher handle publishes; a subscriber handle
// reads its private inbox.
class TopicHandle {
 public:
  const std::string& topic() const { return topic_; }
  const std::string& node() const { return node_; }
  TopicRole role() const { return role_; }

  // Publisher handles only. Throws MasterUnavailable when the master is down
  // (nothing is delivered).
  DeliveryReceipt publish(Payload payload) const;

  // Subscriber handles only.
  std::optional<Envelope> pop() const;
  std::vector<Envelope> drain() const;
  std::size_t pending() const;

 private:
  friend class MasterRegistry;
  TopicHandle(std::shared_ptr<MasterRegistry> master, std::string topic, std::string node, TopicRole role,
              std::shared_ptr<Inbox> inbox)
      : master_(std::move(master)), topic_(std::move(topic)), node_(std::move(node)), role_(role),
        inbox_(std::move(inbox)) {}

  std::shared_ptr<MasterRegistry> master_;
  std::string topic_;
  std::string node_;
  TopicRole role_;
  std::shared_ptr<Inbox> inbox_;
};

// Central registry for nodes and topic routing. Every operation checks that
// the master is alive; kill_master() takes the whole network down.
class MasterRegistry : public std::enable_shared_from_this<MasterRegistry> {
 public:
  static std::shared_ptr<MasterRegistry> create();

  // MasterUnavailable, DuplicateNode.
  void register_node(const std::string& name);
  // MasterUnavailable, UnknownNode.
  TopicHandle open_topic(const std::string& node, const std::string& topic, TopicRole role);

  // Idempotent. Returns true on the call that actually stopped the master.
  bool kill_master();
  bool alive() const;

  std::vector<std::string> nodes() const;
  std::vector<std::string> topics() const;
  std::vector<std::string> publishers(const std::string& topic) const;
  std::vector<std::string> subscribers(const std::string& topic) const;
  std::uint64_t delivered_total() const;

 private:
  friend class TopicHandle;
  MasterRegistry() = default;
  DeliveryReceipt publish(const std::string& node, const std::string& topic, Payload payload);

  struct Topic {
    std::set<std::string> publishers;
    std::vector<std::pair<std::string, std::shared_ptr<Inbox>>> subscribers;
    std::map<std::string, std::uint64_t> seq;
  };

  mutable std::mutex mutex_;
  bool alive_ = true;
  std::set<std::string> nodes_;
  std::map<std::string, Topic> topics_;
  std::uint64_t delivered_ = 0;
};

}  // namespace sitescout
