#include "brainstorm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "brainstorm/assets.hpp"
#include "brainstorm/error.hpp"

namespace brainstorm::analysis {

namespace {

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// " tok1 tok2 ... " from lowercase alphanumeric runs.
std::string token_line(std::string_view text) {
  std::string out = " ";
  bool in_word = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
      in_word = true;
    } else if (in_word) {
      out += ' ';
      in_word = false;
    }
  }
  if (in_word) out += ' ';
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

// ---- projection ------------------------------------------------------------

PcaProjection pca_project(const Eigen::MatrixXd& matrix, int k) {
  const auto n = matrix.rows();
  const auto d = matrix.cols();
  if (n < 3) {
    throw Error(ErrorCode::DegenerateInput, "PCA needs at least 3 rows", json{{"rows", n}});
  }
  if (!matrix.allFinite()) throw Error(ErrorCode::DegenerateInput, "matrix has non-finite values");
  if (k < 1 || k > std::min<Eigen::Index>(n, d)) {
    throw Error(ErrorCode::DegenerateInput, "component count out of range",
                json{{"k", k}, {"rows", n}, {"cols", d}});
  }

  PcaProjection p;
  p.mean = matrix.colwise().mean().transpose();
  const Eigen::MatrixXd centered = matrix.rowwise() - p.mean.transpose();
  if (centered.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::DegenerateInput, "all rows are identical");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const double total = s.squaredNorm();
  p.components.resize(k, d);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v = svd.matrixV().col(i);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    p.components.row(i) = v.transpose();
    p.explained_variance_ratio.push_back(s(i) * s(i) / total);
  }
  p.scores = centered * p.components.transpose();
  p.points.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    p.points.push_back({p.scores(r, 0), k > 1 ? p.scores(r, 1) : 0.0, "", ""});
  }
  return p;
}

PcaProjection pca_project(const Eigen::MatrixXd& matrix, const std::vector<std::string>& personas,
                          const std::vector<std::string>& labels, int k) {
  if (personas.size() != static_cast<std::size_t>(matrix.rows()) || labels.size() != personas.size()) {
    throw Error(ErrorCode::DegenerateInput, "label count does not match row count");
  }
  PcaProjection p = pca_project(matrix, k);
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    p.points[i].persona = personas[i];
    p.points[i].label = labels[i];
  }
  return p;
}

// ---- clustering ------------------------------------------------------------

KMeansResult kmeans(const Eigen::MatrixXd& matrix, int k, std::uint64_t seed) {
  const auto n = matrix.rows();
  if (k < 1 || n < k) {
    throw Error(ErrorCode::DegenerateInput, "k-means needs at least k rows", json{{"rows", n}, {"k", k}});
  }
  if (!matrix.allFinite()) throw Error(ErrorCode::DegenerateInput, "matrix has non-finite values");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  KMeansResult r;
  r.centroids.resize(k, matrix.cols());
  r.centroids.row(0) = matrix.row(pick(rng));
  Eigen::VectorXd nearest = (matrix.rowwise() - r.centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    r.centroids.row(c) = matrix.row(far);
    nearest = nearest.cwiseMin((matrix.rowwise() - r.centroids.row(c)).rowwise().squaredNorm());
  }

  r.assignment.assign(static_cast<std::size_t>(n), 0);
  auto assign = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (r.centroids.rowwise() - matrix.row(i)).rowwise().squaredNorm().minCoeff(&best);
      r.assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  };
  assign();
  while (r.iterations < kMaxKMeansIterations) {
    ++r.iterations;
    Eigen::MatrixXd next = r.centroids;
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, matrix.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = r.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += matrix.row(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) next.row(c) = sums.row(c) / sizes[static_cast<std::size_t>(c)];
    }
    const double shift = (next - r.centroids).rowwise().norm().maxCoeff();
    r.centroids = std::move(next);
    assign();
    if (shift <= kKMeansTolerance) break;
  }
  return r;
}

double purity(const std::vector<int>& assignment, const std::vector<std::string>& labels) {
  if (assignment.size() != labels.size() || labels.empty()) {
    throw Error(ErrorCode::DegenerateInput, "assignment and labels differ in size or are empty");
  }
  std::map<int, std::map<std::string, int>> table;
  for (std::size_t i = 0; i < labels.size(); ++i) ++table[assignment[i]][labels[i]];
  int majority = 0;
  for (const auto& [cluster, counts] : table) {
    int best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(labels.size());
}

double kmeans_purity(const Eigen::MatrixXd& matrix, const std::vector<std::string>& labels, int k,
                     std::uint64_t seed) {
  if (labels.size() != static_cast<std::size_t>(matrix.rows())) {
    throw Error(ErrorCode::DegenerateInput, "label count does not match row count");
  }
  return purity(kmeans(matrix, k, seed).assignment, labels);
}

// ---- themes ----------------------------------------------------------------

double theme_entropy(std::span<const int> counts) {
  long long total = 0;
  for (int c : counts) {
    if (c < 0) throw Error(ErrorCode::DegenerateInput, "negative theme count");
    total += c;
  }
  if (total == 0) throw Error(ErrorCode::EmptyDistribution, "theme counts sum to zero");
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

const std::vector<std::string>& persona_pair_taxonomy() {
  static const std::vector<std::string> kThemes{
      "AI & Data-driven Feedback/Assessment",
      "AI-driven Virtual Patients & Avatars",
      "Augmented Reality & Visualization",
      "Haptics & Tactile Feedback",
      "Remote Collaboration & Telemedicine",
      "Simulation & VR Training",
      "Smart Simulators & Procedural Training",
      "Wearables & Biometric Monitoring",
  };
  return kThemes;
}

const std::vector<std::string>& generalist_taxonomy() {
  static const std::vector<std::string> kThemes{
      "AI-driven Skill Assessment & Feedback",
      "AI-powered Communication & Chatbots",
      "Augmented Reality for Anatomy & Procedures",
      "Case Libraries & Knowledge Repositories",
      "Gamified & Mobile Learning Tools",
      "Personalized Learning & Adaptive Curricula",
      "Remote & Cloud-based Training Platforms",
      "Telemedicine & Remote Consultation Modules",
      "Virtual Patients & Simulations",
      "Wearable Biosensors & Stress Monitoring",
  };
  return kThemes;
}

KeywordThemeClassifier::KeywordThemeClassifier(std::vector<KeywordRule> rules,
                                               std::vector<std::string> fallbacks)
    : rules_(std::move(rules)), fallbacks_(std::move(fallbacks)) {}

KeywordThemeClassifier KeywordThemeClassifier::defaults() {
  std::vector<KeywordRule> rules{
      {"AI & Data-driven Feedback/Assessment",
       {"ai", "analytics", "assessment", "feedback", "score", "metric", "performance", "dashboard"}},
      {"AI-driven Virtual Patients & Avatars",
       {"virtual patient", "avatar", "synthetic patient", "conversational patient", "digital human"}},
      {"Augmented Reality & Visualization",
       {"augmented reality", "ar", "overlay", "hologra", "visualiz", "3d anatomy"}},
      {"Haptics & Tactile Feedback", {"haptic", "tactile", "glove", "force feedback", "touch"}},
      {"Remote Collaboration & Telemedicine",
       {"remote", "telemedicine", "telehealth", "collaborat", "mentor", "distance"}},
      {"Simulation & VR Training", {"simulation", "virtual reality", "vr", "immersive", "scenario"}},
      {"Smart Simulators & Procedural Training",
       {"simulator", "mannequin", "manikin", "procedur", "suturing", "task trainer"}},
      {"Wearables & Biometric Monitoring",
       {"wearable", "biometric", "heart rate", "stress", "sensor", "eye tracking"}},
      {"AI-driven Skill Assessment & Feedback",
       {"assessment", "skill", "feedback", "scoring", "evaluat", "performance"}},
      {"AI-powered Communication & Chatbots",
       {"chatbot", "communication", "conversational", "assistant", "language model"}},
      {"Augmented Reality for Anatomy & Procedures",
       {"augmented reality", "ar", "anatomy", "overlay", "hologra"}},
      {"Case Libraries & Knowledge Repositories",
       {"case librar", "repositor", "knowledge base", "library", "archive"}},
      {"Gamified & Mobile Learning Tools",
       {"gamif", "game", "mobile", "app", "quiz", "leaderboard", "microlearning"}},
      {"Personalized Learning & Adaptive Curricula",
       {"personaliz", "adaptive", "curricul", "learning path", "tailored"}},
      {"Remote & Cloud-based Training Platforms",
       {"cloud", "platform", "online", "remote training", "web based"}},
      {"Telemedicine & Remote Consultation Modules",
       {"telemedicine", "telehealth", "consultation", "remote patient"}},
      {"Virtual Patients & Simulations", {"virtual patient", "simulation", "simulated", "scenario", "vr"}},
      {"Wearable Biosensors & Stress Monitoring",
       {"wearable", "biosensor", "stress", "heart rate", "sensor", "fatigue"}},
  };
  return KeywordThemeClassifier(std::move(rules),
                                {"Simulation & VR Training", "Virtual Patients & Simulations"});
}

std::string KeywordThemeClassifier::classify(const std::string& idea,
                                             const std::vector<std::string>& taxonomy) {
  if (taxonomy.empty()) throw Error(ErrorCode::ClassifierFailure, "taxonomy is empty");
  const std::string text = token_line(idea);
  auto hits = [&](const std::string& keyword) {
    const std::string kw = token_line(keyword);  // " word ... "
    const std::string needle = kw.size() - 2 < 4 ? kw : kw.substr(0, kw.size() - 1);
    int n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
  };

  int best_score = 0;
  const std::string* best = nullptr;
  for (const auto& label : taxonomy) {
    std::vector<std::string> keywords;
    auto rule = std::find_if(rules_.begin(), rules_.end(), [&](const KeywordRule& r) { return r.label == label; });
    if (rule != rules_.end()) {
      keywords = rule->keywords;
    } else {
      std::istringstream words(token_line(label));
      for (std::string w; words >> w;) {
        if (w.size() >= 4) keywords.push_back(w);
      }
    }
    int score = 0;
    for (const auto& kw : keywords) score += hits(kw);
    if (score > best_score) {
      best_score = score;
      best = &label;
    }
  }
  if (best) return *best;
  for (const auto& f : fallbacks_) {
    if (std::find(taxonomy.begin(), taxonomy.end(), f) != taxonomy.end()) return f;
  }
  return taxonomy.front();
}

TurnPrompt LlmThemeClassifier::prompt_for(const std::string& idea,
                                          const std::vector<std::string>& taxonomy) {
  std::string user = "Themes:\n";
  for (const auto& t : taxonomy) user += "- " + t + "\n";
  user += "\nIdea: " + idea;
  return {assets::text("templates/theme_classifier.txt"), user};
}

std::string LlmThemeClassifier::classify(const std::string& idea,
                                         const std::vector<std::string>& taxonomy) {
  if (taxonomy.empty()) throw Error(ErrorCode::ClassifierFailure, "taxonomy is empty");
  std::string reply;
  try {
    reply = provider_->complete(prompt_for(idea, taxonomy));
  } catch (const Error& e) {
    throw Error(ErrorCode::ClassifierFailure, e.what(), e.to_json());
  }
  std::string cleaned = trim(reply);
  while (!cleaned.empty() && std::string_view("-*\"'` ").find(cleaned.front()) != std::string_view::npos) {
    cleaned.erase(0, 1);
  }
  while (!cleaned.empty() && std::string_view(".*\"'` ").find(cleaned.back()) != std::string_view::npos) {
    cleaned.pop_back();
  }
  for (const auto& t : taxonomy) {
    if (lower(t) == lower(cleaned)) return t;
  }
  throw Error(ErrorCode::ClassifierFailure, "reply is not a taxonomy label", json{{"reply", reply}});
}

double ThemeDistribution::entropy(std::size_t persona_index) const {
  return theme_entropy(counts.at(persona_index));
}

std::vector<int> ThemeDistribution::column(const std::string& persona) const {
  auto it = std::find(personas.begin(), personas.end(), persona);
  if (it == personas.end()) throw std::out_of_range("no column " + persona);
  return counts[static_cast<std::size_t>(it - personas.begin())];
}

ThemeDistribution assign_themes(const std::vector<LabeledIdea>& ideas,
                                const std::vector<std::string>& taxonomy,
                                ThemeClassifier& classifier,
                                const std::vector<std::string>& personas) {
  if (taxonomy.empty()) throw Error(ErrorCode::ClassifierFailure, "taxonomy is empty");
  ThemeDistribution d;
  d.themes = taxonomy;
  d.method = std::string(classifier.method());
  auto column_of = [&](const std::string& persona) {
    auto it = std::find(d.personas.begin(), d.personas.end(), persona);
    if (it != d.personas.end()) return static_cast<std::size_t>(it - d.personas.begin());
    d.personas.push_back(persona);
    d.counts.emplace_back(taxonomy.size(), 0);
    return d.personas.size() - 1;
  };
  for (const auto& p : personas) column_of(p);
  for (const auto& idea : ideas) {
    const std::string label = classifier.classify(idea.text, taxonomy);
    auto it = std::find(taxonomy.begin(), taxonomy.end(), label);
    if (it == taxonomy.end()) {
      throw Error(ErrorCode::ClassifierFailure, "classifier returned an unknown label",
                  json{{"label", label}});
    }
    ++d.counts[column_of(idea.persona)][static_cast<std::size_t>(it - taxonomy.begin())];
  }
  return d;
}

ThemeDistribution distribution_from_counts(std::vector<std::string> themes,
                                           std::vector<std::string> personas,
                                           const std::vector<std::vector<int>>& theme_rows) {
  if (theme_rows.size() != themes.size()) {
    throw Error(ErrorCode::DegenerateInput, "row count does not match theme count");
  }
  ThemeDistribution d;
  d.counts.assign(personas.size(), std::vector<int>(themes.size(), 0));
  for (std::size_t t = 0; t < themes.size(); ++t) {
    if (theme_rows[t].size() != personas.size()) {
      throw Error(ErrorCode::DegenerateInput, "ragged count row", json{{"theme", themes[t]}});
    }
    for (std::size_t p = 0; p < personas.size(); ++p) d.counts[p][t] = theme_rows[t][p];
  }
  d.themes = std::move(themes);
  d.personas = std::move(personas);
  d.method = "counts";
  return d;
}

std::string themes_csv(const ThemeDistribution& d) {
  std::string out = "Brainstorming Theme";
  for (const auto& p : d.personas) out += "," + csv_escape(p);
  out += "\n";
  for (std::size_t t = 0; t < d.themes.size(); ++t) {
    out += csv_escape(d.themes[t]);
    for (const auto& col : d.counts) out += "," + std::to_string(col[t]);
    out += "\n";
  }
  out += csv_escape(kEntropyRowLabel);
  for (std::size_t p = 0; p < d.personas.size(); ++p) {
    out += ",";
    try {
      out += fixed(d.entropy(p), 4);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyDistribution) throw;
    }
  }
  out += "\n";
  return out;
}

ThemeDistribution parse_themes_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front().size() < 2) {
    throw Error(ErrorCode::MalformedTranscript, "theme table needs a header and at least one column");
  }
  std::vector<std::string> personas(rows.front().begin() + 1, rows.front().end());
  std::vector<std::string> themes;
  std::vector<std::vector<int>> counts;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].empty() || rows[r][0] == kEntropyRowLabel) continue;
    if (rows[r].size() != personas.size() + 1) {
      throw Error(ErrorCode::MalformedTranscript, "ragged theme row", json{{"row", r}});
    }
    themes.push_back(rows[r][0]);
    std::vector<int> row;
    for (std::size_t c = 1; c < rows[r].size(); ++c) {
      try {
        std::size_t used = 0;
        row.push_back(std::stoi(rows[r][c], &used));
        if (used != rows[r][c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedTranscript, "count is not an integer",
                    json{{"row", r}, {"value", rows[r][c]}});
      }
    }
    counts.push_back(std::move(row));
  }
  return distribution_from_counts(std::move(themes), std::move(personas), counts);
}

// ---- grading ---------------------------------------------------------------

std::string_view to_string(GraderPersona g) {
  switch (g) {
    case GraderPersona::Generalist: return "Generalist";
    case GraderPersona::UXResearcher: return "UX Researcher";
    case GraderPersona::Doctor: return "Doctor";
    case GraderPersona::VREngineer: return "VR Engineer";
  }
  return "unknown";
}

GraderPersona parse_grader(std::string_view text) {
  const std::string key = token_line(text);
  for (auto g : kAllGraders) {
    if (key == token_line(to_string(g))) return g;
  }
  if (key == " ux researcher " || key == " uxresearcher " || key == " ux " ) return GraderPersona::UXResearcher;
  if (key == " vrengineer " || key == " vr ") return GraderPersona::VREngineer;
  throw Error(ErrorCode::UnknownPersona, "unknown grader: " + std::string(text),
              json{{"grader", text}});
}

std::string rubric_prompt(GraderPersona grader) {
  std::string prompt = assets::text("templates/grading_rubric.txt");
  const std::string placeholder = "[PERSONA]";
  const std::string name(to_string(grader));
  for (auto pos = prompt.find(placeholder); pos != std::string::npos;
       pos = prompt.find(placeholder, pos + name.size())) {
    prompt.replace(pos, placeholder.size(), name);
  }
  return prompt;
}

Grade parse_grade(std::string_view response) {
  static const std::regex kLine(R"(^\s*(novelty|depth)\s*:\s*([-+]?\d+(?:\.\d+)?)\s*(?:/\s*10)?\s*$)",
                                std::regex::icase);
  std::optional<double> novelty;
  std::optional<double> depth;
  std::istringstream lines{std::string(response)};
  for (std::string line; std::getline(lines, line);) {
    line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == '*' || c == '_' || c == '#' || c == '\r'; }),
               line.end());
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    const double v = std::clamp(std::stod(m[2].str()), 0.0, 10.0);
    if (lower(m[1].str()) == "novelty") novelty = v;
    else depth = v;
  }
  if (!novelty || !depth) {
    throw Error(ErrorCode::UnparseableGrade, "response lacks a Novelty or Depth score line",
                json{{"response", response}});
  }
  return {*novelty, *depth};
}

std::string render_grade(const Grade& g) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  return "Novelty: " + num(g.novelty) + "\nDepth: " + num(g.depth);
}

ModelConfig default_grader_config() {
  ModelConfig c = default_model_config();
  c.temperature = 0.0;
  return c;
}

GradeRecord grade_idea(const std::string& idea_id, const std::string& idea, GraderPersona grader,
                       CompletionProvider& provider) {
  if (trim(idea).empty()) throw Error(ErrorCode::DegenerateInput, "idea text is empty");
  const Grade g = parse_grade(provider.complete({rubric_prompt(grader), "Idea: " + idea}));
  return {idea_id, grader, g.novelty, g.depth};
}

std::string GradeMatrix::to_csv() const {
  std::string out = "configuration,grader,mean_novelty,mean_depth,ideas\n";
  for (const auto& c : cells) {
    out += csv_escape(c.configuration) + "," + csv_escape(to_string(c.grader)) + "," +
           fixed(c.mean_novelty, 4) + "," + fixed(c.mean_depth, 4) + "," + std::to_string(c.ideas) + "\n";
  }
  return out;
}

json GradeMatrix::to_json() const {
  json configurations = json::array();
  json graders = json::array();
  json rows = json::array();
  for (const auto& c : cells) {
    if (std::find(configurations.begin(), configurations.end(), c.configuration) == configurations.end()) {
      configurations.push_back(c.configuration);
    }
    if (std::find(graders.begin(), graders.end(), to_string(c.grader)) == graders.end()) {
      graders.push_back(to_string(c.grader));
    }
    rows.push_back({{"configuration", c.configuration},
                    {"grader", to_string(c.grader)},
                    {"mean_novelty", c.mean_novelty},
                    {"mean_depth", c.mean_depth},
                    {"ideas", c.ideas}});
  }
  return {{"configurations", configurations}, {"graders", graders}, {"cells", rows}};
}

GradeMatrix grade_matrix(const std::vector<Experiment>& experiments,
                         const std::vector<GraderPersona>& graders, const GraderProviders& providers) {
  GradeMatrix m;
  for (const auto& e : experiments) {
    if (e.ideas.empty()) {
      throw Error(ErrorCode::DegenerateInput, "experiment has no ideas", json{{"experiment", e.label}});
    }
    for (auto g : graders) {
      CompletionProvider& provider = providers(g);
      double novelty = 0.0;
      double depth = 0.0;
      for (const auto& idea : e.ideas) {
        const auto r = grade_idea(idea.idea_id, idea.text, g, provider);
        novelty += r.novelty;
        depth += r.depth;
      }
      const auto n = static_cast<double>(e.ideas.size());
      m.cells.push_back({e.label, g, novelty / n, depth / n, static_cast<int>(e.ideas.size())});
    }
  }
  return m;
}

// ---- inputs and reports ----------------------------------------------------

Experiment experiment_from_transcript(const Transcript& t) {
  const auto& c = t.session.config;
  Experiment e;
  e.label = std::string(slug(c.persona_a)) + "-" + std::string(slug(c.persona_b)) + "-" +
            std::string(to_string(c.ideation_system));
  e.agents = std::string(display_name(c.persona_a)) + " x " + std::string(display_name(c.persona_b));
  e.ideation_system = std::string(to_string(c.ideation_system));
  for (const auto& entry : t.entries) {
    const auto& a = entry.action;
    std::string phase = "unknown";
    for (const auto& p : t.session.phases) {
      if (p.index == a.phase_index) phase = std::string(to_string(p.kind));
    }
    e.ideas.push_back({a.action_id, std::string(display_name(a.persona)), phase, a.idea_text});
  }
  return e;
}

Transcript read_transcript(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path)).get<Transcript>();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedTranscript, path.string() + ": " + e.what(),
                json{{"path", path.string()}});
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedTranscript, path.string() + ": " + e.what(),
                json{{"path", path.string()}});
  }
}

namespace {

Experiment experiment_from_csv(const std::filesystem::path& path) {
  Experiment e;
  e.label = path.stem().string();
  e.ideation_system = "unknown";
  e.ideas = read_idea_csv(read_file(path));
  std::vector<std::string> seen;
  for (const auto& i : e.ideas) {
    if (std::find(seen.begin(), seen.end(), i.persona) == seen.end()) seen.push_back(i.persona);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) e.agents += (i ? " x " : "") + seen[i];
  return e;
}

}  // namespace

std::vector<Experiment> load_experiments(const std::vector<std::filesystem::path>& inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& in : inputs) {
    if (std::filesystem::is_directory(in)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(in)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".json" || ext == ".csv")) found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (std::filesystem::exists(in)) {
      files.push_back(in);
    } else {
      throw Error(ErrorCode::MalformedTranscript, "no such file: " + in.string(),
                  json{{"path", in.string()}});
    }
  }
  if (files.empty()) throw Error(ErrorCode::NoTranscripts, "no transcripts found");

  std::vector<Experiment> out;
  std::map<std::string, int> used;
  for (const auto& f : files) {
    Experiment e = f.extension() == ".csv" ? experiment_from_csv(f)
                                           : experiment_from_transcript(read_transcript(f));
    if (const int n = ++used[e.label]; n > 1) e.label += "-" + std::to_string(n);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedTranscript, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<IdeaRecord> read_idea_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::MalformedTranscript, "idea CSV is empty");
  const auto& header = rows.front();
  auto col = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::MalformedTranscript, "idea CSV lacks column " + std::string(name));
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id = col("idea_id"), persona = col("persona"), phase = col("phase"), text_col = col("text");
  std::vector<IdeaRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorCode::MalformedTranscript, "ragged idea CSV row", json{{"row", r}});
    }
    out.push_back({rows[r][id], rows[r][persona], rows[r][phase], rows[r][text_col]});
  }
  return out;
}

AnalysisReport analyze(const std::vector<Experiment>& experiments, const EmbeddingProvider& embedder,
                       ThemeClassifier& classifier, const AnalysisOptions& options) {
  if (experiments.empty()) throw Error(ErrorCode::NoTranscripts, "no experiments to analyze");
  std::vector<std::string> texts, personas, labels, columns;
  std::vector<LabeledIdea> labeled;
  for (const auto& e : experiments) {
    for (const auto& i : e.ideas) {
      texts.push_back(i.text);
      personas.push_back(i.persona);
      labels.push_back(e.label);
      const std::string column = e.label + "/" + i.persona;
      if (std::find(columns.begin(), columns.end(), column) == columns.end()) columns.push_back(column);
      labeled.push_back({column, i.text});
    }
  }
  if (texts.empty()) throw Error(ErrorCode::DegenerateInput, "experiments contain no ideas");

  AnalysisReport report;
  const Eigen::MatrixXd all = embed(texts, embedder);
  report.pca = pca_project(all, personas, labels);

  Eigen::Index row = 0;
  for (const auto& e : experiments) {
    const auto n = static_cast<Eigen::Index>(e.ideas.size());
    std::vector<std::string> own(personas.begin() + row, personas.begin() + row + n);
    report.purity.push_back(
        {e.label, e.agents, e.ideation_system, kmeans_purity(all.middleRows(row, n), own, 2, options.seed)});
    row += n;
  }
  report.themes = assign_themes(labeled, options.taxonomy, classifier, columns);
  return report;
}

std::string pca_csv(const PcaProjection& p) {
  std::string out = "x,y,persona,label\n";
  for (const auto& pt : p.points) {
    out += fixed(pt.x, 6) + "," + fixed(pt.y, 6) + "," + csv_escape(pt.persona) + "," +
           csv_escape(pt.label) + "\n";
  }
  return out;
}

std::string purity_csv(const std::vector<PurityRow>& rows) {
  std::string out = "experiment,agents,ideation_system,cluster_purity\n";
  for (const auto& r : rows) {
    out += csv_escape(r.experiment) + "," + csv_escape(r.agents) + "," + csv_escape(r.ideation_system) +
           "," + fixed(r.cluster_purity, 4) + "\n";
  }
  return out;
}

std::vector<std::filesystem::path> write_report(const AnalysisReport& report,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::filesystem::path> paths{dir / "pca.csv", dir / "purity.csv", dir / "themes.csv"};
  write_file(paths[0], pca_csv(report.pca));
  write_file(paths[1], purity_csv(report.purity));
  write_file(paths[2], themes_csv(report.themes));
  json experiments = json::array();
  for (const auto& r : report.purity) experiments.push_back(r.experiment);
  write_file(dir / "metadata.json",
             json{{"theme_classifier", report.themes.method},
                  {"experiments", experiments},
                  {"explained_variance_ratio", report.pca.explained_variance_ratio}}
                     .dump(2) + "\n");
  return paths;
}

}  // namespace brainstorm::analysis
