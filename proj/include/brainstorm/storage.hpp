#pragma once

#include <atomic>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "brainstorm/domain.hpp"
#include "brainstorm/gateway.hpp"

struct sqlite3;

namespace brainstorm {

enum class PromptSource { Default, Override };

// Embedded SQLite store for sessions, actions, sticky notes, prompts and
// configuration. One connection guarded by a mutex: concurrent callers are
// serialized, which also serializes writers per session.
//
// Every failure of the underlying database surfaces as
// Error(StorageUnavailable).
class Storage {
 public:
  // ":memory:" gives a private in-memory database. Applies pending
  // migrations from assets/migrations in version order.
  explicit Storage(const std::string& path);
  ~Storage();

  Storage(const Storage&) = delete;
  Storage& operator=(const Storage&) = delete;

  const std::string& path() const { return path_; }
  int schema_version() const;
  std::vector<std::string> index_names(const std::string& table) const;
  // Column names of the index, in key order.
  std::vector<std::string> index_columns(const std::string& index) const;

  void create_session(const Session& session);
  void update_session(const Session& session);
  Session load_session(const std::string& session_id) const;  // UnknownSession
  bool has_session(const std::string& session_id) const;
  std::vector<std::string> list_sessions() const;

  // Action and note land in one transaction. turn_number must be exactly one
  // past the stored maximum (0 for the first): DuplicateTurn if it is at or
  // below, TurnGap if it skips ahead, UnknownSession if the session is absent.
  void append_action(const AgentAction& action, const StickyNote& note);

  // Ordered by turn_number. With a filter, reads through the
  // (session_id, persona) index.
  std::vector<AgentAction> load_history(const std::string& session_id,
                                        std::optional<PersonaId> persona_filter = {}) const;
  std::vector<StickyNote> load_notes(const std::string& session_id) const;
  Transcript load_transcript(const std::string& session_id) const;

  ModelConfig get_model_config(PersonaId persona) const;
  void put_model_config(PersonaId persona, const ModelConfig& config);

  // Session-scoped overrides use the session id; defaults use "".
  void put_prompt(PersonaId persona, PromptSource source, const std::string& text,
                  const std::string& session_id = {});
  std::optional<std::string> get_prompt(PersonaId persona, PromptSource source,
                                        const std::string& session_id = {}) const;
  // Inserts defaults that are not stored yet; existing (possibly edited) rows win.
  void seed_default_prompts();

  // Test seam: throw between the action insert and the note insert.
  void set_fail_between_action_and_note(bool on) { fail_between_writes_ = on; }

 private:
  void exec(const std::string& sql) const;
  void migrate();

  std::string path_;
  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex mu_;
  std::atomic<bool> fail_between_writes_{false};
};

}  // namespace brainstorm
