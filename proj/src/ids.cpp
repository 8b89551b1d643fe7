#include "brainstorm/ids.hpp"

#include <cstdio>

namespace brainstorm {

std::string format_id(std::uint64_t hi, std::uint64_t lo) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                static_cast<unsigned>(hi & 0xffff), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RandomIdSource::RandomIdSource() {
  std::random_device rd;
  std::seed_seq seq{rd(), rd(), rd(), rd()};
  rng_.seed(seq);
}

std::string RandomIdSource::next() {
  std::lock_guard lock(mu_);
  const auto hi = rng_();
  const auto lo = rng_();
  return format_id(hi, lo);
}

std::string RandomIdSource::session_id(const SessionConfig&) { return next(); }
std::string RandomIdSource::action_id(std::string_view, int) { return next(); }
std::string RandomIdSource::note_id(std::string_view, int) { return next(); }

std::string DeterministicIdSource::derive(std::string_view purpose, std::string_view key,
                                          std::uint64_t n) const {
  std::uint64_t state = seed_ ^ fnv1a64(purpose);
  state ^= fnv1a64(key, state);
  state += n * 0x100000001b3ULL;
  const auto hi = splitmix64(state);
  const auto lo = splitmix64(state);
  return format_id(hi, lo);
}

std::string DeterministicIdSource::session_id(const SessionConfig& config) {
  std::uint64_t n = 0;
  {
    std::lock_guard lock(mu_);
    n = sessions_created_++;
  }
  return derive("session", json(config).dump(), n);
}

std::string DeterministicIdSource::action_id(std::string_view session_id, int turn_number) {
  return derive("action", session_id, static_cast<std::uint64_t>(turn_number));
}

std::string DeterministicIdSource::note_id(std::string_view session_id, int turn_number) {
  return derive("note", session_id, static_cast<std::uint64_t>(turn_number));
}

Timestamp SystemClock::stamp(int) {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

}  // namespace brainstorm
