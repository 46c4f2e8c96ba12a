#include "sitescout/msgbus.hpp"

#include "sitescout/error.hpp"

namespace sitescout {

void Inbox::push(Envelope e) {
  std::lock_guard lock(mutex_);
  queue_.push_back(std::move(e));
}

std::optional<Envelope> Inbox::pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  Envelope e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::vector<Envelope> Inbox::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Envelope> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t Inbox::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

DeliveryReceipt TopicHandle::publish(Payload payload) const {
  if (role_ != TopicRole::Publisher) {
    throw Error(ErrorCode::InvalidCommand, "handle for '" + topic_ + "' was not opened for publishing");
  }
  return master_->publish(node_, topic_, std::move(payload));
}

std::optional<Envelope> TopicHandle::pop() const {
  if (!inbox_) throw Error(ErrorCode::InvalidCommand, "handle for '" + topic_ + "' is not a subscription");
  return inbox_->pop();
}

std::vector<Envelope> TopicHandle::drain() const {
  if (!inbox_) throw Error(ErrorCode::InvalidCommand, "handle for '" + topic_ + "' is not a subscription");
  return inbox_->drain();
}

std::size_t TopicHandle::pending() const { return inbox_ ? inbox_->size() : 0; }

std::shared_ptr<MasterRegistry> MasterRegistry::create() {
  return std::shared_ptr<MasterRegistry>(new MasterRegistry());
}

void MasterRegistry::register_node(const std::string& name) {
  std::lock_guard lock(mutex_);
  if (!alive_) throw Error(ErrorCode::MasterUnavailable, "master is down");
  if (!nodes_.insert(name).second) throw Error(ErrorCode::DuplicateNode, "node '" + name + "' already registered");
}

TopicHandle MasterRegistry::open_topic(const std::string& node, const std::string& topic, TopicRole role) {
  std::lock_guard lock(mutex_);
  if (!alive_) throw Error(ErrorCode::MasterUnavailable, "master is down");
  if (!nodes_.count(node)) throw Error(ErrorCode::UnknownNode, "node '" + node + "' is not registered");
  Topic& t = topics_[topic];
  std::shared_ptr<Inbox> inbox;
  if (role == TopicRole::Publisher) {
    t.publishers.insert(node);
  } else {
    inbox = std::make_shared<Inbox>();
    t.subscribers.emplace_back(node, inbox);
  }
  return TopicHandle(shared_from_this(), topic, node, role, std::move(inbox));
}

DeliveryReceipt MasterRegistry::publish(const std::string& node, const std::string& topic, Payload payload) {
  std::lock_guard lock(mutex_);
  if (!alive_) throw Error(ErrorCode::MasterUnavailable, "master is down; '" + topic + "' not delivered");
  Topic& t = topics_.at(topic);
  DeliveryReceipt receipt;
  receipt.seq = ++t.seq[node];
  for (const auto& [name, inbox] : t.subscribers) {
    inbox->push(Envelope{topic, node, receipt.seq, payload});
    ++receipt.delivered;
  }
  delivered_ += receipt.delivered;
  return receipt;
}

bool MasterRegistry::kill_master() {
  std::lock_guard lock(mutex_);
  const bool was_alive = alive_;
  alive_ = false;
  return was_alive;
}

bool MasterRegistry::alive() const {
  std::lock_guard lock(mutex_);
  return alive_;
}

std::vector<std::string> MasterRegistry::nodes() const {
  std::lock_guard lock(mutex_);
  return {nodes_.begin(), nodes_.end()};
}

std::vector<std::string> MasterRegistry::topics() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, t] : topics_) out.push_back(name);
  return out;
}

std::vector<std::string> MasterRegistry::publishers(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  const auto it = topics_.find(topic);
  if (it == topics_.end()) return {};
  return {it->second.publishers.begin(), it->second.publishers.end()};
}

std::vector<std::string> MasterRegistry::subscribers(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  const auto it = topics_.find(topic);
  if (it == topics_.end()) return {};
  std::vector<std::string> out;
  for (const auto& [name, inbox] : it->second.subscribers) out.push_back(name);
  return out;
}

std::uint64_t MasterRegistry::delivered_total() const {
  std::lock_guard lock(mutex_);
  return delivered_;
}

}  // namespace sitescout
