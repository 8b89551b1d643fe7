#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "brainstorm/analysis.hpp"
#include "brainstorm/error.hpp"
#include "brainstorm/http_client.hpp"
#include "brainstorm/runtime.hpp"
#include "brainstorm/server.hpp"

namespace fs = std::filesystem;
using namespace brainstorm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEngine = 1;
constexpr int kExitUsage = 2;

int exit_code_for(ErrorCode code) {
  if (is_validation_error(code) || code == ErrorCode::NoTranscripts) return kExitUsage;
  return kExitEngine;
}

void fail_json(const json& error) { std::cerr << error.dump() << "\n"; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedTranscript, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct RunArgs {
  std::string topic = "How can new technology improve training new medical professionals?";
  std::string a = "doctor";
  std::string b = "vr-engineer";
  std::string system = "separate-then-together";
  int separate_turns = 10;
  int together_turns = 20;
  std::string script;
  std::string model = "gpt-4.1";
  double temperature = 1.0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string db = ":memory:";
  std::optional<int> poll_ms;
};

int cmd_run(const RunArgs& args) {
  SessionConfig config;
  config.topic = args.topic;
  config.persona_a = parse_persona(args.a);
  config.persona_b = parse_persona(args.b);
  config.ideation_system = parse_ideation_system(args.system);
  config.separate_turns = args.separate_turns;
  config.together_turns = args.together_turns;
  const ValidatedConfig valid = validate_config(config);

  ModelConfig model;
  model.model_name = args.model;
  model.temperature = args.temperature;
  const bool scripted = !args.script.empty();
  if (scripted) {
    model.provider = ProviderKind::ScriptedPlayback;
    model.script_source = fs::absolute(args.script).string();
  }

  RuntimeOptions options;
  options.database = args.db;
  options.model = model;
  options.deterministic_seed = args.seed ? args.seed : (scripted ? std::optional<std::uint64_t>(0) : std::nullopt);
  options.engine.poll_interval = std::chrono::milliseconds(args.poll_ms.value_or(scripted ? 10 : 1000));
  Runtime rt(options);

  const Session session = rt.engine().create_session(valid.get());
  const RunReport report = rt.engine().run_session(session.session_id);
  const std::string text = canonical_dump(report.transcript);
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_text(args.out, text);
    std::cout << json{{"session_id", session.session_id},
                      {"transcript", args.out},
                      {"actions", report.transcript.entries.size()},
                      {"status", report.status}}
                     .dump()
              << "\n";
  }
  return kExitOk;
}

int cmd_serve(const std::string& db, const std::string& host, int http_port, int ws_port, int poll_ms) {
  RuntimeOptions options;
  options.database = db;
  options.engine.poll_interval = std::chrono::milliseconds(poll_ms);
  Runtime rt(options);
  Server server(rt, {host, http_port, ws_port});
  server.start();
  std::cout << json{{"http_port", server.http_port()}, {"ws_port", server.ws_port()}}.dump() << std::endl;
  server.wait();
  return kExitOk;
}

int cmd_export(const std::string& db, const std::string& session_id, const std::string& out) {
  if (!fs::exists(db)) throw Error(ErrorCode::StorageUnavailable, "no database at " + db);
  Storage storage(db);
  const std::string text = canonical_dump(storage.load_transcript(session_id));
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return kExitOk;
}

const std::vector<std::string>& taxonomy_named(const std::string& name) {
  if (name == "generalist") return analysis::generalist_taxonomy();
  return analysis::persona_pair_taxonomy();
}

std::unique_ptr<EmbeddingProvider> make_embedder(const std::string& kind, const std::string& model,
                                                 std::size_t dimension) {
  if (kind == "remote") {
    const RemoteEndpoint ep = endpoint_from_environment(default_model_config());
    return std::make_unique<RemoteEmbeddingProvider>(ep.base_url, ep.api_key, model, dimension);
  }
  return std::make_unique<HashedTermFrequencyEmbedder>();
}

struct AnalyzeArgs {
  std::vector<std::string> inputs;
  std::string out = "report";
  std::string taxonomy = "persona-pair";
  std::string classifier = "keyword";
  std::string embedding = "local";
  std::string embedding_model = "text-embedding-3-small";
  std::size_t embedding_dim = 1536;
  std::uint64_t seed = 0;
  std::string counts;
};

int cmd_analyze(const AnalyzeArgs& args) {
  if (!args.counts.empty()) {
    const auto d = analysis::parse_themes_csv(read_text(args.counts));
    json entropy = json::object();
    for (std::size_t p = 0; p < d.personas.size(); ++p) {
      try {
        entropy[d.personas[p]] = d.entropy(p);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyDistribution) throw;
        entropy[d.personas[p]] = nullptr;
      }
    }
    const fs::path themes = fs::path(args.out) / "themes.csv";
    write_text(themes, analysis::themes_csv(d));
    std::cout << json{{"entropy", entropy}, {"files", {themes.string()}}}.dump() << "\n";
    return kExitOk;
  }

  std::vector<fs::path> inputs(args.inputs.begin(), args.inputs.end());
  const auto experiments = analysis::load_experiments(inputs);
  const auto embedder = make_embedder(args.embedding, args.embedding_model, args.embedding_dim);
  std::unique_ptr<analysis::ThemeClassifier> classifier;
  if (args.classifier == "llm") {
    const ModelConfig cfg = analysis::default_grader_config();
    classifier = std::make_unique<analysis::LlmThemeClassifier>(
        std::make_shared<RemoteChatProvider>(cfg, endpoint_from_environment(cfg)));
  } else {
    classifier = std::make_unique<analysis::KeywordThemeClassifier>(analysis::KeywordThemeClassifier::defaults());
  }
  analysis::AnalysisOptions options;
  options.seed = args.seed;
  options.taxonomy = taxonomy_named(args.taxonomy);
  const auto report = analysis::analyze(experiments, *embedder, *classifier, options);
  json files = json::array();
  for (const auto& p : analysis::write_report(report, args.out)) files.push_back(p.string());
  std::cout << json{{"files", files}, {"experiments", experiments.size()}, {"theme_classifier", report.themes.method}}
                   .dump()
            << "\n";
  return kExitOk;
}

// Replays grader replies in order, wrapping around at the end.
class CyclingScript final : public CompletionProvider {
 public:
  explicit CyclingScript(std::vector<std::string> replies) : replies_(std::move(replies)) {
    if (replies_.empty()) throw Error(ErrorCode::ScriptExhausted, "grader script is empty");
  }
  std::string complete(const TurnPrompt&, const CompletionOptions&) override {
    return replies_[next_++ % replies_.size()];
  }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

struct GradeArgs {
  std::vector<std::string> inputs;
  std::string graders = "all";
  std::string script;
  std::string model = "gpt-4.1";
  std::string out = "grades";
};

int cmd_grade(const GradeArgs& args) {
  std::vector<analysis::GraderPersona> graders;
  if (args.graders == "all") {
    graders.assign(std::begin(analysis::kAllGraders), std::end(analysis::kAllGraders));
  } else {
    std::istringstream list(args.graders);
    for (std::string item; std::getline(list, item, ',');) graders.push_back(analysis::parse_grader(item));
  }

  std::map<analysis::GraderPersona, std::unique_ptr<CompletionProvider>> providers;
  if (!args.script.empty()) {
    const json doc = json::parse(read_text(args.script));
    for (auto g : graders) {
      std::vector<std::string> entries;
      if (doc.is_array()) entries = doc.get<std::vector<std::string>>();
      else entries = doc.at(std::string(analysis::to_string(g))).get<std::vector<std::string>>();
      providers[g] = std::make_unique<CyclingScript>(std::move(entries));
    }
  } else {
    ModelConfig cfg = analysis::default_grader_config();
    cfg.model_name = args.model;
    for (auto g : graders) providers[g] = std::make_unique<RemoteChatProvider>(cfg, endpoint_from_environment(cfg));
  }

  std::vector<fs::path> inputs(args.inputs.begin(), args.inputs.end());
  const auto experiments = analysis::load_experiments(inputs);
  const auto matrix = analysis::grade_matrix(
      experiments, graders, [&](analysis::GraderPersona g) -> CompletionProvider& { return *providers.at(g); });
  const fs::path csv = fs::path(args.out) / "grades.csv";
  const fs::path js = fs::path(args.out) / "grades.json";
  write_text(csv, matrix.to_csv());
  write_text(js, matrix.to_json().dump(2) + "\n");
  std::cout << json{{"files", {csv.string(), js.string()}}, {"cells", matrix.cells.size()}}.dump() << "\n";
  return kExitOk;
}

int cmd_personas(bool matrix, const std::string& db) {
  HashedTermFrequencyEmbedder embedder;
  std::optional<Storage> storage;
  if (!db.empty()) storage.emplace(db);
  const PersonaRegistry registry =
      storage ? load_registry(*storage, embedder) : PersonaRegistry::defaults(embedder);
  if (matrix) {
    std::cout << registry.similarity_matrix().to_csv();
    return kExitOk;
  }
  json out = json::array();
  for (const auto& p : registry.all()) {
    out.push_back({{"id", p.id},
                   {"display_name", p.display_name},
                   {"base_color", p.base_color},
                   {"system_prompt", p.system_prompt}});
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

struct SetModelArgs {
  std::string server = "http://127.0.0.1:8080";
  bool all = false;
  std::string persona;
  std::string model = "gpt-4.1";
  double temperature = 1.0;
  std::string provider = "remote";
  std::string script;
  std::string endpoint;
};

int cmd_set_model(const SetModelArgs& args) {
  ModelConfig model;
  model.model_name = args.model;
  model.temperature = args.temperature;
  model.endpoint = args.endpoint;
  if (args.provider == "scripted") {
    model.provider = ProviderKind::ScriptedPlayback;
    model.script_source = args.script.empty() ? "" : fs::absolute(args.script).string();
  }
  validate_model_config(model);
  json body{{"model", model}};
  if (!args.all) body["persona"] = std::string(slug(parse_persona(args.persona)));

  net::HttpRequest req;
  req.url = args.server + "/api/models/remount";
  req.body = body.dump();
  req.timeout = std::chrono::minutes{2};
  const auto res = net::send(req);
  if (res.status != 200) {
    json err;
    try {
      err = json::parse(res.body);
    } catch (const json::exception&) {
      err = {{"error", "ServerError"}, {"message", res.body}, {"detail", {{"status", res.status}}}};
    }
    fail_json(err);
    return res.status == 400 ? kExitUsage : kExitEngine;
  }
  std::cout << json::parse(res.body).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-persona brainstorming engine"};
  app.require_subcommand(1);
  int code = kExitOk;

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one session in-process and write its transcript");
  run_cmd->add_option("--topic", run.topic, "Brainstorming question");
  run_cmd->add_option("--a", run.a, "First persona");
  run_cmd->add_option("--b", run.b, "Second persona");
  run_cmd->add_option("--system", run.system, "separate | together | separate-then-together");
  run_cmd->add_option("--separate-turns", run.separate_turns);
  run_cmd->add_option("--together-turns", run.together_turns);
  run_cmd->add_option("--script", run.script, "Scripted playback fixture (JSON)");
  run_cmd->add_option("--model", run.model);
  run_cmd->add_option("--temperature", run.temperature);
  run_cmd->add_option("--seed", run.seed, "Deterministic ids and timestamps");
  run_cmd->add_option("--out", run.out, "Transcript path (stdout when omitted)");
  run_cmd->add_option("--db", run.db, "SQLite database path");
  run_cmd->add_option("--poll-ms", run.poll_ms, "Task poll interval");
  run_cmd->callback([&] { code = cmd_run(run); });

  std::string serve_db = "brainstorm.db", serve_host = "127.0.0.1";
  int http_port = 8080, ws_port = 8081, serve_poll = 1000;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the REST, agent and event endpoints");
  serve_cmd->add_option("--db", serve_db);
  serve_cmd->add_option("--host", serve_host);
  serve_cmd->add_option("--http-port", http_port);
  serve_cmd->add_option("--ws-port", ws_port);
  serve_cmd->add_option("--poll-ms", serve_poll);
  serve_cmd->callback([&] { code = cmd_serve(serve_db, serve_host, http_port, ws_port, serve_poll); });

  std::string export_db, export_session, export_out;
  auto* export_cmd = app.add_subcommand("export", "Write a stored session's canonical transcript");
  export_cmd->add_option("--db", export_db)->required();
  export_cmd->add_option("--session", export_session)->required();
  export_cmd->add_option("--out", export_out);
  export_cmd->callback([&] { code = cmd_export(export_db, export_session, export_out); });

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "PCA, cluster purity and theme entropy reports");
  analyze_cmd->add_option("inputs", analyze.inputs, "Transcript files, idea CSVs or directories");
  analyze_cmd->add_option("--out", analyze.out, "Report directory");
  analyze_cmd->add_option("--taxonomy", analyze.taxonomy)->check(CLI::IsMember({"persona-pair", "generalist"}));
  analyze_cmd->add_option("--classifier", analyze.classifier)->check(CLI::IsMember({"keyword", "llm"}));
  analyze_cmd->add_option("--embedding", analyze.embedding)->check(CLI::IsMember({"local", "remote"}));
  analyze_cmd->add_option("--embedding-model", analyze.embedding_model);
  analyze_cmd->add_option("--embedding-dim", analyze.embedding_dim);
  analyze_cmd->add_option("--seed", analyze.seed);
  analyze_cmd->add_option("--counts", analyze.counts, "Theme count table; entropy only");
  analyze_cmd->callback([&] { code = cmd_analyze(analyze); });

  GradeArgs grade;
  auto* grade_cmd = app.add_subcommand("grade", "Grade ideas for novelty and depth");
  grade_cmd->add_option("inputs", grade.inputs)->required();
  grade_cmd->add_option("--graders", grade.graders, "all, or a comma list");
  grade_cmd->add_option("--script", grade.script, "Scripted grader replies (JSON), reused cyclically");
  grade_cmd->add_option("--model", grade.model);
  grade_cmd->add_option("--out", grade.out);
  grade_cmd->callback([&] { code = cmd_grade(grade); });

  bool matrix = false;
  std::string personas_db;
  auto* personas_cmd = app.add_subcommand("personas", "List personas or print the similarity matrix");
  personas_cmd->add_flag("--matrix", matrix, "Similarity matrix as CSV");
  personas_cmd->add_option("--db", personas_db, "Apply edited prompts from this database");
  personas_cmd->callback([&] { code = cmd_personas(matrix, personas_db); });

  SetModelArgs set_model;
  auto* set_model_cmd = app.add_subcommand("set-model", "Remount agents of a running server");
  set_model_cmd->add_option("--server", set_model.server);
  auto* all_flag = set_model_cmd->add_flag("--all", set_model.all);
  auto* persona_opt = set_model_cmd->add_option("--persona", set_model.persona);
  all_flag->excludes(persona_opt);
  set_model_cmd->add_option("--model", set_model.model);
  set_model_cmd->add_option("--temperature", set_model.temperature);
  set_model_cmd->add_option("--provider", set_model.provider)->check(CLI::IsMember({"remote", "scripted"}));
  set_model_cmd->add_option("--script", set_model.script);
  set_model_cmd->add_option("--endpoint", set_model.endpoint);
  set_model_cmd->callback([&] {
    if (!set_model.all && set_model.persona.empty()) throw CLI::ValidationError("set-model", "--all or --persona is required");
    code = cmd_set_model(set_model);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_json({{"error", "UsageError"}, {"message", e.what()}, {"detail", nullptr}});
    return kExitUsage;
  } catch (const Error& e) {
    fail_json(e.to_json());
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    fail_json({{"error", "MalformedInput"}, {"message", e.what()}, {"detail", nullptr}});
    return kExitUsage;
  } catch (const std::exception& e) {
    fail_json({{"error", "EngineFailure"}, {"message", e.what()}, {"detail", nullptr}});
    return kExitEngine;
  }
  return code;
}
