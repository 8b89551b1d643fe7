#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include "brainstorm/domain.hpp"

namespace brainstorm {

// 128 bits rendered as lowercase 8-4-4-4-12 hex.
std::string format_id(std::uint64_t hi, std::uint64_t lo);

// Source of session/action/note identifiers. Implementations must be safe to
// call from several session threads at once.
class IdSource {
 public:
  virtual ~IdSource() = default;
  virtual std::string session_id(const SessionConfig& config) = 0;
  virtual std::string action_id(std::string_view session_id, int turn_number) = 0;
  virtual std::string note_id(std::string_view session_id, int turn_number) = 0;
};

class RandomIdSource final : public IdSource {
 public:
  RandomIdSource();
  std::string session_id(const SessionConfig& config) override;
  std::string action_id(std::string_view session_id, int turn_number) override;
  std::string note_id(std::string_view session_id, int turn_number) override;

 private:
  std::string next();

  std::mutex mu_;
  std::mt19937_64 rng_;
};

// Ids are a pure function of (seed, inputs), so a resumed session regenerates
// exactly the ids an uninterrupted run would have produced. Used for scripted
// runs where transcripts must be byte-reproducible.
class DeterministicIdSource final : public IdSource {
 public:
  explicit DeterministicIdSource(std::uint64_t seed) : seed_(seed) {}
  std::string session_id(const SessionConfig& config) override;
  std::string action_id(std::string_view session_id, int turn_number) override;
  std::string note_id(std::string_view session_id, int turn_number) override;

 private:
  std::string derive(std::string_view purpose, std::string_view key, std::uint64_t n) const;

  std::uint64_t seed_;
  std::mutex mu_;
  std::uint64_t sessions_created_ = 0;
};

// Timestamp source for actions.
class TurnClock {
 public:
  virtual ~TurnClock() = default;
  virtual Timestamp stamp(int turn_number) = 0;
};

class SystemClock final : public TurnClock {
 public:
  Timestamp stamp(int turn_number) override;
};

// epoch + turn_number * step; makes created_at reproducible.
class LogicalClock final : public TurnClock {
 public:
  explicit LogicalClock(Timestamp epoch, std::chrono::milliseconds step = std::chrono::seconds{1})
      : epoch_(epoch), step_(step) {}
  Timestamp stamp(int turn_number) override { return epoch_ + step_ * turn_number; }

 private:
  Timestamp epoch_;
  std::chrono::milliseconds step_;
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 14695981039346656037ULL);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace brainstorm
