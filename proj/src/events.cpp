#include "brainstorm/events.hpp"

#include <stdexcept>

namespace brainstorm {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ActionProduced: return "action_produced";
    case EventKind::PhaseTransition: return "phase_transition";
    case EventKind::SessionComplete: return "session_complete";
    case EventKind::SessionFailed: return "session_failed";
  }
  return "unknown";
}

void to_json(json& j, EventKind v) { j = std::string(to_string(v)); }
void from_json(const json& j, EventKind& v) {
  const auto s = j.get<std::string>();
  for (auto k : {EventKind::ActionProduced, EventKind::PhaseTransition, EventKind::SessionComplete,
                 EventKind::SessionFailed}) {
    if (s == to_string(k)) {
      v = k;
      return;
    }
  }
  throw std::invalid_argument("unknown event kind: " + s);
}

void to_json(json& j, const SessionEvent& v) {
  j = json{{"event_kind", v.event_kind},
           {"session_id", v.session_id},
           {"payload", v.payload},
           {"sequence", v.sequence}};
}
void from_json(const json& j, SessionEvent& v) {
  j.at("event_kind").get_to(v.event_kind);
  j.at("session_id").get_to(v.session_id);
  v.payload = j.at("payload");
  j.at("sequence").get_to(v.sequence);
}

SessionEvent action_produced(const std::string& session_id, const AgentAction& action,
                             const StickyNote& note) {
  return {EventKind::ActionProduced, session_id, json{{"action", action}, {"note", note}}, 0};
}

SessionEvent phase_transition(const std::string& session_id, int from_index, int to_index) {
  return {EventKind::PhaseTransition, session_id,
          json{{"from_phase_index", from_index}, {"to_phase_index", to_index}}, 0};
}

SessionEvent session_complete(const std::string& session_id, int total_actions) {
  return {EventKind::SessionComplete, session_id, json{{"total_actions", total_actions}}, 0};
}

SessionEvent session_failed(const std::string& session_id, const json& error) {
  return {EventKind::SessionFailed, session_id, json{{"error", error}}, 0};
}

std::optional<SessionEvent> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  SessionEvent e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::vector<SessionEvent> Subscription::drain() {
  std::lock_guard lock(mu_);
  std::vector<SessionEvent> out(std::make_move_iterator(queue_.begin()),
                                std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

bool Subscription::overflowed() const {
  std::lock_guard lock(mu_);
  return overflowed_;
}

bool Subscription::offer(const SessionEvent& event) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return false;
    if (queue_.size() >= capacity_) {
      closed_ = true;
      overflowed_ = true;
    } else {
      queue_.push_back(event);
    }
  }
  cv_.notify_all();
  return !overflowed();
}

std::shared_ptr<Subscription> EventHub::subscribe(const std::string& session_id) {
  auto sub = std::make_shared<Subscription>(session_id, buffer_size_);
  std::lock_guard lock(mu_);
  registry_[session_id].push_back(sub);
  return sub;
}

std::size_t EventHub::broadcast(SessionEvent event) {
  std::lock_guard lock(mu_);
  event.sequence = ++next_sequence_[event.session_id];
  auto it = registry_.find(event.session_id);
  if (it == registry_.end()) return 0;
  std::size_t delivered = 0;
  auto& subs = it->second;
  for (auto s = subs.begin(); s != subs.end();) {
    auto live = s->lock();
    if (live && live->offer(event)) {
      ++delivered;
      ++s;
    } else {
      s = subs.erase(s);
    }
  }
  if (subs.empty()) registry_.erase(it);
  return delivered;
}

std::size_t EventHub::subscriber_count(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = registry_.find(session_id);
  if (it == registry_.end()) return 0;
  std::size_t n = 0;
  for (const auto& w : it->second) {
    if (auto s = w.lock(); s && !s->closed()) ++n;
  }
  return n;
}

}  // namespace brainstorm
