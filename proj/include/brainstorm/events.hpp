#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "brainstorm/domain.hpp"

namespace brainstorm {

enum class EventKind { ActionProduced, PhaseTransition, SessionComplete, SessionFailed };

std::string_view to_string(EventKind kind);

struct SessionEvent {
  EventKind event_kind = EventKind::ActionProduced;
  std::string session_id;
  json payload;
  std::uint64_t sequence = 0;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

void to_json(json& j, EventKind v);
void from_json(const json& j, EventKind& v);
void to_json(json& j, const SessionEvent& v);
void from_json(const json& j, SessionEvent& v);

SessionEvent action_produced(const std::string& session_id, const AgentAction& action,
                             const StickyNote& note);
SessionEvent phase_transition(const std::string& session_id, int from_index, int to_index);
SessionEvent session_complete(const std::string& session_id, int total_actions);
SessionEvent session_failed(const std::string& session_id, const json& error);

// One subscriber's bounded inbox. The hub disconnects the subscription when
// its buffer is full rather than waiting on it.
class Subscription {
 public:
  Subscription(std::string session_id, std::size_t capacity)
      : session_id_(std::move(session_id)), capacity_(capacity) {}

  const std::string& session_id() const { return session_id_; }

  // Blocks up to `timeout`; nullopt on timeout or once closed and drained.
  std::optional<SessionEvent> next(std::chrono::milliseconds timeout);
  std::vector<SessionEvent> drain();

  // Client side hang-up; the hub prunes closed subscriptions.
  void close();
  bool closed() const;
  // True when the hub dropped this subscriber for falling behind.
  bool overflowed() const;

 private:
  friend class EventHub;
  // False (and closes) when the buffer is full or already closed.
  bool offer(const SessionEvent& event);

  std::string session_id_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SessionEvent> queue_;
  bool closed_ = false;
  bool overflowed_ = false;
};

// Per-session subscriber registry. The hub holds subscriptions weakly: a
// dropped handle or closed subscription counts as dead and is pruned on the
// next broadcast to that session.
class EventHub {
 public:
  static constexpr std::size_t kDefaultBufferSize = 256;

  explicit EventHub(std::size_t buffer_size = kDefaultBufferSize) : buffer_size_(buffer_size) {}

  std::shared_ptr<Subscription> subscribe(const std::string& session_id);

  // Assigns the next per-session sequence number, then delivers. Returns the
  // number of live subscribers that received the event.
  std::size_t broadcast(SessionEvent event);

  std::size_t subscriber_count(const std::string& session_id) const;

 private:
  std::size_t buffer_size_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::weak_ptr<Subscription>>> registry_;
  std::map<std::string, std::uint64_t> next_sequence_;
};

}  // namespace brainstorm
