#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brainstorm/domain.hpp"
#include "brainstorm/embedding.hpp"
#include "brainstorm/gateway.hpp"

namespace brainstorm::analysis {

// ---- projection ------------------------------------------------------------

struct PcaPoint {
  double x = 0.0;
  double y = 0.0;
  std::string persona;
  std::string label;
};

struct PcaProjection {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x d, orthonormal rows
  std::vector<double> explained_variance_ratio;
  Eigen::MatrixXd scores;      // n x k
  std::vector<PcaPoint> points;
};

// Centers rows and projects them onto the top-k principal directions. Each
// component's largest-magnitude entry is positive. Throws DegenerateInput for
// fewer than 3 rows, non-finite values or all rows identical.
PcaProjection pca_project(const Eigen::MatrixXd& matrix, int k = 2);

// Same, with per-row persona and experiment labels copied into `points`.
PcaProjection pca_project(const Eigen::MatrixXd& matrix, const std::vector<std::string>& personas,
                          const std::vector<std::string>& labels, int k = 2);

// ---- clustering ------------------------------------------------------------

inline constexpr int kMaxKMeansIterations = 100;
inline constexpr double kKMeansTolerance = 1e-6;

struct KMeansResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centroids;
  int iterations = 0;
};

// Lloyd's algorithm. The first centroid is a seeded random row, each later
// one the row farthest from the centroids chosen so far.
KMeansResult kmeans(const Eigen::MatrixXd& matrix, int k, std::uint64_t seed);

// (1/N) * sum over clusters of the largest label count in the cluster.
double purity(const std::vector<int>& assignment, const std::vector<std::string>& labels);

// Throws DegenerateInput when rows < k or labels do not match the rows.
double kmeans_purity(const Eigen::MatrixXd& matrix, const std::vector<std::string>& labels,
                     int k = 2, std::uint64_t seed = 0);

// ---- themes ----------------------------------------------------------------

// Base-2 Shannon entropy of the normalized counts. Throws EmptyDistribution
// when the counts sum to zero and DegenerateInput on a negative count.
double theme_entropy(std::span<const int> counts);

// Theme lists used by the two reference experiments.
const std::vector<std::string>& persona_pair_taxonomy();
const std::vector<std::string>& generalist_taxonomy();

class ThemeClassifier {
 public:
  virtual ~ThemeClassifier() = default;
  // Returns exactly one label from `taxonomy`.
  virtual std::string classify(const std::string& idea, const std::vector<std::string>& taxonomy) = 0;
  // "keyword" or "llm", recorded in report metadata.
  virtual std::string_view method() const = 0;
};

struct KeywordRule {
  std::string label;
  std::vector<std::string> keywords;
};

// Scores each label by keyword hits (case-insensitive, matched at word starts;
// keywords under four letters must match whole words). Ties go to
// taxonomy order. With no hits the first fallback present in the taxonomy
// wins, else the first label. Labels without a rule use their own words of
// four letters or more.
class KeywordThemeClassifier final : public ThemeClassifier {
 public:
  KeywordThemeClassifier(std::vector<KeywordRule> rules, std::vector<std::string> fallbacks);
  std::string classify(const std::string& idea, const std::vector<std::string>& taxonomy) override;
  std::string_view method() const override { return "keyword"; }

  // Rules for both reference taxonomies.
  static KeywordThemeClassifier defaults();

 private:
  std::vector<KeywordRule> rules_;
  std::vector<std::string> fallbacks_;
};

// Asks a completion provider to pick the label. Throws ClassifierFailure when
// the reply is not one of the labels.
class LlmThemeClassifier final : public ThemeClassifier {
 public:
  explicit LlmThemeClassifier(std::shared_ptr<CompletionProvider> provider)
      : provider_(std::move(provider)) {}
  std::string classify(const std::string& idea, const std::vector<std::string>& taxonomy) override;
  std::string_view method() const override { return "llm"; }

  static TurnPrompt prompt_for(const std::string& idea, const std::vector<std::string>& taxonomy);

 private:
  std::shared_ptr<CompletionProvider> provider_;
};

struct LabeledIdea {
  std::string persona;  // column name, e.g. "Doctor"
  std::string text;
};

struct ThemeDistribution {
  std::vector<std::string> themes;
  std::vector<std::string> personas;
  // counts[p][t]: ideas of personas[p] assigned to themes[t].
  std::vector<std::vector<int>> counts;
  std::string method;

  // Throws EmptyDistribution for a persona with no ideas.
  double entropy(std::size_t persona_index) const;
  std::vector<int> column(const std::string& persona) const;
};

// `personas` pre-declares columns (kept even when empty); others are appended
// in order of first appearance.
ThemeDistribution assign_themes(const std::vector<LabeledIdea>& ideas,
                                const std::vector<std::string>& taxonomy,
                                ThemeClassifier& classifier,
                                const std::vector<std::string>& personas = {});

// Builds a distribution straight from counts (rows = themes, columns = personas).
ThemeDistribution distribution_from_counts(std::vector<std::string> themes,
                                           std::vector<std::string> personas,
                                           const std::vector<std::vector<int>>& theme_rows);

inline constexpr std::string_view kEntropyRowLabel = "Entropy (spread across themes)";

// Theme rows then the entropy row; an empty column gets an empty entropy cell.
std::string themes_csv(const ThemeDistribution& d);
ThemeDistribution parse_themes_csv(const std::string& text);

// ---- grading ---------------------------------------------------------------

enum class GraderPersona { Generalist, UXResearcher, Doctor, VREngineer };

inline constexpr GraderPersona kAllGraders[] = {GraderPersona::Generalist, GraderPersona::UXResearcher,
                                                GraderPersona::Doctor, GraderPersona::VREngineer};

std::string_view to_string(GraderPersona g);
GraderPersona parse_grader(std::string_view text);

struct Grade {
  double novelty = 0.0;
  double depth = 0.0;

  friend bool operator==(const Grade&, const Grade&) = default;
};

struct GradeRecord {
  std::string idea_id;
  GraderPersona grader = GraderPersona::Generalist;
  double novelty = 0.0;
  double depth = 0.0;
};

std::string rubric_prompt(GraderPersona grader);

// Reads the last "Novelty: n" and "Depth: n" lines and clamps both to
// [0, 10]. Throws UnparseableGrade when either is missing.
Grade parse_grade(std::string_view response);
std::string render_grade(const Grade& g);

// Graders default to temperature 0.
ModelConfig default_grader_config();

GradeRecord grade_idea(const std::string& idea_id, const std::string& idea, GraderPersona grader,
                       CompletionProvider& provider);

struct GradeCell {
  std::string configuration;
  GraderPersona grader = GraderPersona::Generalist;
  double mean_novelty = 0.0;
  double mean_depth = 0.0;
  int ideas = 0;
};

struct GradeMatrix {
  std::vector<GradeCell> cells;  // configuration-major, graders in the given order

  std::string to_csv() const;
  json to_json() const;
};

struct IdeaRecord {
  std::string idea_id;
  std::string persona;
  std::string phase;
  std::string text;
};

struct Experiment {
  std::string label;
  std::string agents;           // "Doctor x VR Engineer"
  std::string ideation_system;  // snake_case, or "unknown"
  std::vector<IdeaRecord> ideas;
};

using GraderProviders = std::function<CompletionProvider&(GraderPersona)>;

// Grades every idea of every experiment with every grader; cells hold means.
GradeMatrix grade_matrix(const std::vector<Experiment>& experiments,
                         const std::vector<GraderPersona>& graders, const GraderProviders& providers);

// ---- inputs and reports ----------------------------------------------------

Experiment experiment_from_transcript(const Transcript& t);

// Throws MalformedTranscript.
Transcript read_transcript(const std::filesystem::path& path);

// Files are read as given; directories contribute their *.json files in name
// order. Throws NoTranscripts when nothing is found.
std::vector<Experiment> load_experiments(const std::vector<std::filesystem::path>& inputs);

// Columns idea_id, persona, phase, text (RFC 4180 quoting).
std::vector<IdeaRecord> read_idea_csv(const std::string& text);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string csv_escape(std::string_view field);

struct PurityRow {
  std::string experiment;
  std::string agents;
  std::string ideation_system;
  double cluster_purity = 0.0;
};

struct AnalysisReport {
  PcaProjection pca;
  std::vector<PurityRow> purity;
  ThemeDistribution themes;
};

struct AnalysisOptions {
  std::uint64_t seed = 0;
  std::vector<std::string> taxonomy = persona_pair_taxonomy();
};

// One PCA space over all experiments, purity per experiment, and theme counts
// with one column per (experiment, persona).
AnalysisReport analyze(const std::vector<Experiment>& experiments, const EmbeddingProvider& embedder,
                       ThemeClassifier& classifier, const AnalysisOptions& options = {});

std::string pca_csv(const PcaProjection& p);
std::string purity_csv(const std::vector<PurityRow>& rows);

// Writes pca.csv, purity.csv and themes.csv into `dir` and returns their
// paths. metadata.json alongside records the classifier method.
std::vector<std::filesystem::path> write_report(const AnalysisReport& report,
                                                const std::filesystem::path& dir);

}  // namespace brainstorm::analysis
