#include "brainstorm/storage.hpp"

#include <sqlite3.h>

#include "brainstorm/assets.hpp"
#include "brainstorm/error.hpp"
#include "brainstorm/personas.hpp"

namespace brainstorm {

namespace {

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw Error(ErrorCode::StorageUnavailable,
              what + ": " + (db ? sqlite3_errmsg(db) : "no database handle"));
}

// Prepared statement with positional binding.
class Stmt {
 public:
  Stmt(sqlite3* db, const std::string& sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) {
      fail(db, "prepare '" + sql + "'");
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    check(sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Stmt& bind(int i, std::string_view v) { return bind(i, std::string(v)); }
  Stmt& bind(int i, const char* v) { return bind(i, std::string(v)); }
  Stmt& bind(int i, int v) {
    check(sqlite3_bind_int(stmt_, i, v));
    return *this;
  }
  Stmt& bind(int i, double v) {
    check(sqlite3_bind_double(stmt_, i, v));
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }

  // Runs to completion; returns the sqlite result code of the final step
  // without throwing on constraint violations.
  int run_allow_constraint() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_DONE || (rc & 0xff) == SQLITE_CONSTRAINT) return rc;
    fail(db_, "step");
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string{};
  }
  int integer(int col) const { return sqlite3_column_int(stmt_, col); }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(db_, "bind");
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

// BEGIN IMMEDIATE ... COMMIT, rolled back unless commit() runs.
class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) {
    if (sqlite3_exec(db_, "BEGIN IMMEDIATE", nullptr, nullptr, nullptr) != SQLITE_OK) {
      fail(db_, "begin");
    }
  }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    if (sqlite3_exec(db_, "COMMIT", nullptr, nullptr, nullptr) != SQLITE_OK) fail(db_, "commit");
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

std::string_view source_name(PromptSource s) {
  return s == PromptSource::Default ? "default" : "override";
}

AgentAction read_action(const Stmt& s) {
  AgentAction a;
  a.action_id = s.text(0);
  a.session_id = s.text(1);
  a.persona = parse_persona(s.text(2));
  a.phase_index = s.integer(3);
  a.turn_number = s.integer(4);
  a.idea_text = s.text(5);
  a.created_at = parse_timestamp(s.text(6));
  return a;
}

constexpr const char* kActionColumns =
    "action_id, session_id, persona, phase_index, turn_number, idea_text, created_at";

}  // namespace

Storage::Storage(const std::string& path) : path_(path) {
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::StorageUnavailable, "cannot open database " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA foreign_keys = ON");
  if (path != ":memory:") exec("PRAGMA journal_mode = WAL");
  migrate();
  seed_default_prompts();
}

Storage::~Storage() {
  if (db_) sqlite3_close(db_);
}

void Storage::exec(const std::string& sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::StorageUnavailable, "sql failed: " + msg);
  }
}

void Storage::migrate() {
  std::lock_guard lock(mu_);
  const int current = schema_version();
  // Files are named NNN_description.sql; the map keeps them sorted.
  for (const auto& [name, sql] : assets::table()) {
    if (!name.starts_with("migrations/")) continue;
    const int version = std::stoi(std::string(name.substr(std::string_view("migrations/").size(), 3)));
    if (version <= current) continue;
    Transaction tx(db_);
    exec(std::string(sql));
    exec("PRAGMA user_version = " + std::to_string(version));
    tx.commit();
  }
}

int Storage::schema_version() const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "PRAGMA user_version");
  return s.step() ? s.integer(0) : 0;
}

std::vector<std::string> Storage::index_names(const std::string& table) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT name FROM sqlite_master WHERE type = 'index' AND tbl_name = ? ORDER BY name");
  s.bind(1, table);
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

std::vector<std::string> Storage::index_columns(const std::string& index) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT name FROM pragma_index_info(?) ORDER BY seqno");
  s.bind(1, index);
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

void Storage::create_session(const Session& session) {
  std::lock_guard lock(mu_);
  Stmt s(db_,
         "INSERT INTO sessions (session_id, config_json, phases_json, status) VALUES (?, ?, ?, ?)");
  s.bind(1, session.session_id)
      .bind(2, json(session.config).dump())
      .bind(3, json(session.phases).dump())
      .bind(4, to_string(session.status));
  if (s.run_allow_constraint() != SQLITE_DONE) {
    throw Error(ErrorCode::StorageUnavailable, "session already exists: " + session.session_id);
  }
}

void Storage::update_session(const Session& session) {
  std::lock_guard lock(mu_);
  Stmt s(db_, "UPDATE sessions SET config_json = ?, phases_json = ?, status = ? WHERE session_id = ?");
  s.bind(1, json(session.config).dump())
      .bind(2, json(session.phases).dump())
      .bind(3, to_string(session.status))
      .bind(4, session.session_id);
  s.step();
  if (sqlite3_changes(db_) == 0) {
    throw Error(ErrorCode::UnknownSession, "no session " + session.session_id,
                json{{"session_id", session.session_id}});
  }
}

Session Storage::load_session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT config_json, phases_json, status FROM sessions WHERE session_id = ?");
  s.bind(1, session_id);
  if (!s.step()) {
    throw Error(ErrorCode::UnknownSession, "no session " + session_id,
                json{{"session_id", session_id}});
  }
  Session out;
  out.session_id = session_id;
  out.config = json::parse(s.text(0)).get<SessionConfig>();
  out.phases = json::parse(s.text(1)).get<std::vector<Phase>>();
  out.status = json(s.text(2)).get<SessionStatus>();
  return out;
}

bool Storage::has_session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT 1 FROM sessions WHERE session_id = ?");
  s.bind(1, session_id);
  return s.step();
}

std::vector<std::string> Storage::list_sessions() const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT session_id FROM sessions ORDER BY rowid");
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

void Storage::append_action(const AgentAction& action, const StickyNote& note) {
  std::lock_guard lock(mu_);
  Transaction tx(db_);
  {
    Stmt exists(db_, "SELECT 1 FROM sessions WHERE session_id = ?");
    exists.bind(1, action.session_id);
    if (!exists.step()) {
      throw Error(ErrorCode::UnknownSession, "no session " + action.session_id,
                  json{{"session_id", action.session_id}});
    }
  }
  int expected = 0;
  {
    Stmt max(db_, "SELECT MAX(turn_number) FROM actions WHERE session_id = ?");
    max.bind(1, action.session_id);
    if (max.step() && !max.is_null(0)) expected = max.integer(0) + 1;
  }
  if (action.turn_number < expected) {
    throw Error(ErrorCode::DuplicateTurn,
                "turn " + std::to_string(action.turn_number) + " already stored",
                json{{"session_id", action.session_id}, {"turn_number", action.turn_number}});
  }
  if (action.turn_number > expected) {
    throw Error(ErrorCode::TurnGap,
                "turn " + std::to_string(action.turn_number) + " skips ahead of " +
                    std::to_string(expected),
                json{{"session_id", action.session_id},
                     {"turn_number", action.turn_number},
                     {"expected", expected}});
  }
  {
    Stmt ins(db_, std::string("INSERT INTO actions (") + kActionColumns +
                      ") VALUES (?, ?, ?, ?, ?, ?, ?)");
    ins.bind(1, action.action_id)
        .bind(2, action.session_id)
        .bind(3, slug(action.persona))
        .bind(4, action.phase_index)
        .bind(5, action.turn_number)
        .bind(6, action.idea_text)
        .bind(7, format_timestamp(action.created_at));
    if (ins.run_allow_constraint() != SQLITE_DONE) {
      throw Error(ErrorCode::DuplicateTurn, "action conflicts with a stored action",
                  json{{"action_id", action.action_id}, {"turn_number", action.turn_number}});
    }
  }
  if (fail_between_writes_) {
    throw Error(ErrorCode::StorageUnavailable, "injected failure between action and note");
  }
  {
    Stmt ins(db_,
             "INSERT INTO sticky_notes (note_id, action_id, session_id, color_name, color_hex, x, y) "
             "VALUES (?, ?, ?, ?, ?, ?, ?)");
    ins.bind(1, note.note_id)
        .bind(2, note.action_id)
        .bind(3, action.session_id)
        .bind(4, note.color.name)
        .bind(5, note.color.hex)
        .bind(6, note.x)
        .bind(7, note.y);
    ins.step();
  }
  tx.commit();
}

std::vector<AgentAction> Storage::load_history(const std::string& session_id,
                                               std::optional<PersonaId> persona_filter) const {
  std::lock_guard lock(mu_);
  if (!has_session(session_id)) {
    throw Error(ErrorCode::UnknownSession, "no session " + session_id,
                json{{"session_id", session_id}});
  }
  std::vector<AgentAction> out;
  if (persona_filter) {
    Stmt s(db_, std::string("SELECT ") + kActionColumns +
                    " FROM actions INDEXED BY idx_actions_session_persona"
                    " WHERE session_id = ? AND persona = ? ORDER BY turn_number");
    s.bind(1, session_id).bind(2, slug(*persona_filter));
    while (s.step()) out.push_back(read_action(s));
  } else {
    Stmt s(db_, std::string("SELECT ") + kActionColumns +
                    " FROM actions WHERE session_id = ? ORDER BY turn_number");
    s.bind(1, session_id);
    while (s.step()) out.push_back(read_action(s));
  }
  return out;
}

std::vector<StickyNote> Storage::load_notes(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Stmt s(db_,
         "SELECT n.note_id, n.action_id, n.color_name, n.color_hex, n.x, n.y "
         "FROM sticky_notes n JOIN actions a ON a.action_id = n.action_id "
         "WHERE n.session_id = ? ORDER BY a.turn_number");
  s.bind(1, session_id);
  std::vector<StickyNote> out;
  while (s.step()) {
    out.push_back(StickyNote{s.text(0), s.text(1), Color{s.text(2), s.text(3)}, s.real(4),
                             s.real(5)});
  }
  return out;
}

Transcript Storage::load_transcript(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Transcript t;
  t.session = load_session(session_id);
  auto actions = load_history(session_id);
  auto notes = load_notes(session_id);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    // Notes and actions are written together, so the orders line up.
    t.entries.push_back({std::move(actions[i]), i < notes.size() ? notes[i] : StickyNote{}});
  }
  return t;
}

ModelConfig Storage::get_model_config(PersonaId persona) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT value FROM config WHERE key = ?");
  s.bind(1, "model:" + std::string(slug(persona)));
  if (!s.step()) return default_model_config();
  return json::parse(s.text(0)).get<ModelConfig>();
}

void Storage::put_model_config(PersonaId persona, const ModelConfig& config) {
  std::lock_guard lock(mu_);
  Stmt s(db_, "INSERT INTO config (key, value) VALUES (?, ?) "
              "ON CONFLICT(key) DO UPDATE SET value = excluded.value");
  s.bind(1, "model:" + std::string(slug(persona))).bind(2, json(config).dump());
  s.step();
}

void Storage::put_prompt(PersonaId persona, PromptSource source, const std::string& text,
                         const std::string& session_id) {
  std::lock_guard lock(mu_);
  Stmt s(db_, "INSERT INTO prompts (persona, source, session_id, prompt_text) VALUES (?, ?, ?, ?) "
              "ON CONFLICT(persona, source, session_id) DO UPDATE SET prompt_text = excluded.prompt_text");
  s.bind(1, slug(persona)).bind(2, source_name(source)).bind(3, session_id).bind(4, text);
  s.step();
}

std::optional<std::string> Storage::get_prompt(PersonaId persona, PromptSource source,
                                               const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT prompt_text FROM prompts WHERE persona = ? AND source = ? AND session_id = ?");
  s.bind(1, slug(persona)).bind(2, source_name(source)).bind(3, session_id);
  if (!s.step()) return std::nullopt;
  return s.text(0);
}

void Storage::seed_default_prompts() {
  std::lock_guard lock(mu_);
  for (PersonaId id : kAllPersonas) {
    Stmt s(db_, "INSERT OR IGNORE INTO prompts (persona, source, session_id, prompt_text) "
                "VALUES (?, 'default', '', ?)");
    s.bind(1, slug(id)).bind(2, default_prompt(id));
    s.step();
  }
}

}  // namespace brainstorm
