#include <doctest.h>

#include <fstream>

#include "brainstorm/analysis.hpp"
#include "brainstorm/error.hpp"
#include "../oracles.hpp"
#include "../support.hpp"
#include "generators.hpp"

using namespace brainstorm;
namespace an = brainstorm::analysis;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::MalformedEnvelope;
}

class FixedReply final : public CompletionProvider {
 public:
  explicit FixedReply(std::string r) : r_(std::move(r)) {}
  std::string complete(const TurnPrompt& p, const CompletionOptions&) override {
    last = p;
    return r_;
  }
  TurnPrompt last;

 private:
  std::string r_;
};

an::Experiment experiment(const std::string& label, int n_per_persona) {
  an::Experiment e;
  e.label = label;
  e.agents = "Doctor x VR Engineer";
  e.ideation_system = "separate";
  for (int i = 0; i < n_per_persona; ++i) {
    e.ideas.push_back({label + "d" + std::to_string(i), "Doctor", "separate_ideation",
                       "Bedside teaching rounds with patient feedback " + std::to_string(i)});
    e.ideas.push_back({label + "v" + std::to_string(i), "VR Engineer", "separate_ideation",
                       "Haptic glove headset simulation engine " + std::to_string(i)});
  }
  return e;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("property: entropy matches the oracle and its bounds") {
    gen::Rng rng(53);
    for (int i = 0; i < 500; ++i) {
      auto counts = gen::counts(rng, gen::int_in(rng, 1, 12), 9);
      counts[0] += 1;
      const double h = an::theme_entropy(counts);
      CHECK(h == doctest::Approx(oracles::entropy_bits(counts)).epsilon(1e-12));
      int nonzero = 0;
      for (int c : counts) nonzero += c > 0;
      CHECK(h >= 0.0);
      CHECK(h <= std::log2(static_cast<double>(nonzero)) + 1e-12);
    }
  }

  TEST_CASE("entropy edge cases") {
    CHECK(an::theme_entropy(std::vector<int>{4, 4, 4, 4}) == doctest::Approx(2.0));
    CHECK(an::theme_entropy(std::vector<int>{0, 7, 0}) == 0.0);
    CHECK(code_of([] { an::theme_entropy(std::vector<int>{0, 0}); }) == ErrorCode::EmptyDistribution);
    CHECK(code_of([] { an::theme_entropy(std::vector<int>{1, -1}); }) == ErrorCode::DegenerateInput);
  }

  TEST_CASE("taxonomies") {
    CHECK(an::persona_pair_taxonomy().size() == 8);
    CHECK(an::generalist_taxonomy().size() == 10);
  }

  TEST_CASE("property: PCA matches a Jacobi eigendecomposition") {
    gen::Rng rng(59);
    for (int i = 0; i < 10; ++i) {
      const int rows = gen::int_in(rng, 5, 40), cols = gen::int_in(rng, 2, 10);
      const auto m = oracles::random_matrix(rng, rows, cols);
      const int k = gen::int_in(rng, 1, std::min(rows, cols));
      const auto got = an::pca_project(m, k);
      const auto want = oracles::jacobi_pca(m, k);
      CHECK((got.components - want.components).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((got.scores - want.scores).cwiseAbs().maxCoeff() < 1e-8);
      const Eigen::MatrixXd gram = got.components * got.components.transpose();
      CHECK((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("PCA rejects degenerate input") {
    CHECK(code_of([] { an::pca_project(Eigen::MatrixXd::Ones(2, 3)); }) == ErrorCode::DegenerateInput);
    CHECK(code_of([] { an::pca_project(Eigen::MatrixXd::Ones(5, 3)); }) == ErrorCode::DegenerateInput);
    Eigen::MatrixXd nan = Eigen::MatrixXd::Random(5, 3);
    nan(1, 1) = std::nan("");
    CHECK(code_of([&] { an::pca_project(nan); }) == ErrorCode::DegenerateInput);
    CHECK(code_of([] { an::pca_project(Eigen::MatrixXd::Random(5, 3), 4); }) == ErrorCode::DegenerateInput);
  }

  TEST_CASE("property: purity matches the brute-force oracle") {
    gen::Rng rng(61);
    for (int i = 0; i < 200; ++i) {
      const int n = gen::int_in(rng, 1, 30);
      std::vector<int> assignment;
      std::vector<std::string> labels;
      for (int j = 0; j < n; ++j) {
        assignment.push_back(gen::int_in(rng, 0, 2));
        labels.push_back(gen::coin(rng) ? "x" : "y");
      }
      CHECK(an::purity(assignment, labels) == doctest::Approx(oracles::purity(assignment, labels)));
    }
  }

  TEST_CASE("k-means is seeded and separates distant clusters") {
    gen::Rng rng(67);
    const auto pts = oracles::two_clusters(rng, 25, 4, 12.0);
    const auto a = an::kmeans(pts.matrix, 2, 5);
    const auto b = an::kmeans(pts.matrix, 2, 5);
    CHECK(a.assignment == b.assignment);
    CHECK(a.iterations <= an::kMaxKMeansIterations);
    CHECK(an::purity(a.assignment, pts.labels) == 1.0);
    CHECK(code_of([&] { an::kmeans_purity(pts.matrix.topRows(1), {"a"}); }) == ErrorCode::DegenerateInput);
    CHECK(code_of([&] { an::kmeans_purity(pts.matrix, {"a"}); }) == ErrorCode::DegenerateInput);
  }

  TEST_CASE("keyword classifier picks the best-scoring label") {
    auto c = an::KeywordThemeClassifier::defaults();
    const auto& tax = an::persona_pair_taxonomy();
    CHECK(c.classify("Haptic gloves that push back when tissue is grasped", tax) == "Haptics & Tactile Feedback");
    CHECK(c.classify("Wearable sensors tracking heart rate under stress", tax) == "Wearables & Biometric Monitoring");
    CHECK(c.classify("Telemedicine consults with a remote mentor", tax) == "Remote Collaboration & Telemedicine");
    CHECK(c.classify("zzz qqq", tax) == "Simulation & VR Training");
    CHECK(c.method() == "keyword");
  }

  TEST_CASE("keyword classifier rules: short keywords match whole words, ties go to taxonomy order") {
    an::KeywordThemeClassifier c({{"Alpha", {"ar"}}, {"Beta", {"simul"}}}, {});
    const std::vector<std::string> tax{"Alpha", "Beta"};
    CHECK(c.classify("an AR overlay", tax) == "Alpha");
    CHECK(c.classify("early warning", tax) == "Alpha");  // no hits: first label
    CHECK(c.classify("simulated ward", tax) == "Beta");
    CHECK(c.classify("AR simulation", tax) == "Alpha");
  }

  TEST_CASE("LLM classifier accepts a label and rejects anything else") {
    const auto& tax = an::generalist_taxonomy();
    auto good = std::make_shared<FixedReply>("  gamified & mobile learning tools. ");
    an::LlmThemeClassifier c(good);
    CHECK(c.classify("a phone quiz app", tax) == "Gamified & Mobile Learning Tools");
    CHECK(good->last.user_prompt.find("a phone quiz app") != std::string::npos);
    an::LlmThemeClassifier bad(std::make_shared<FixedReply>("Something else"));
    CHECK(code_of([&] { bad.classify("x", tax); }) == ErrorCode::ClassifierFailure);
  }

  TEST_CASE("theme tables round-trip through CSV with an entropy row") {
    const auto d = an::distribution_from_counts({"T1", "T2"}, {"A", "B", "C"}, {{1, 0, 0}, {1, 2, 0}});
    const auto csv = an::themes_csv(d);
    CHECK(csv.rfind("Brainstorming Theme,A,B,C\n", 0) == 0);
    CHECK(csv.find(std::string(an::kEntropyRowLabel) + ",1.0000,0.0000,") != std::string::npos);
    const auto back = an::parse_themes_csv(csv);
    CHECK(back.counts == d.counts);
    CHECK(back.personas == d.personas);
    CHECK(code_of([] { an::parse_themes_csv("Brainstorming Theme,A\nT,x\n"); }) == ErrorCode::MalformedTranscript);
  }

  TEST_CASE("assign_themes keeps declared columns and counts every idea") {
    auto c = an::KeywordThemeClassifier::defaults();
    const auto d = an::assign_themes({{"Doctor", "haptic gloves"}, {"Doctor", "wearable monitor"}},
                                     an::persona_pair_taxonomy(), c, {"Doctor", "VR Engineer"});
    CHECK(d.personas == std::vector<std::string>{"Doctor", "VR Engineer"});
    int total = 0;
    for (int v : d.column("Doctor")) total += v;
    CHECK(total == 2);
    CHECK(code_of([&] { d.entropy(1); }) == ErrorCode::EmptyDistribution);
  }

  TEST_CASE("property: grades render and parse back") {
    gen::Rng rng(71);
    for (int i = 0; i < 300; ++i) {
      const an::Grade g{gen::int_in(rng, 0, 100) / 10.0, gen::int_in(rng, 0, 100) / 10.0};
      CHECK(an::parse_grade(an::render_grade(g)) == g);
    }
  }

  TEST_CASE("grade parsing tolerates markdown and takes the last score") {
    CHECK(an::parse_grade("**Novelty:** 8/10\n**Depth**: 6") == an::Grade{8, 6});
    CHECK(an::parse_grade("Novelty: 3\nDepth: 4\nRevised.\nNovelty: 5\nDepth: 7") == an::Grade{5, 7});
    CHECK(an::parse_grade("novelty: 11.5\ndepth: -2") == an::Grade{10, 0});
    CHECK(code_of([] { an::parse_grade("Novelty: 4"); }) == ErrorCode::UnparseableGrade);
  }

  TEST_CASE("rubric prompt names the grader and keeps the score lines") {
    for (auto g : an::kAllGraders) {
      const auto p = an::rubric_prompt(g);
      CHECK(p.find(std::string(an::to_string(g))) != std::string::npos);
      CHECK(p.find("[PERSONA]") == std::string::npos);
      CHECK(p.find("Novelty: [0") != std::string::npos);
    }
    CHECK(an::parse_grader("ux researcher") == an::GraderPersona::UXResearcher);
    CHECK(an::default_grader_config().temperature == 0.0);
  }

  TEST_CASE("grade matrix cells hold means per configuration and grader") {
    std::vector<an::Experiment> exps{experiment("e1", 1), experiment("e2", 2)};
    ScriptedPlaybackProvider doctor({"Novelty: 2\nDepth: 4", "Novelty: 4\nDepth: 8", "Novelty: 6\nDepth: 0",
                                     "Novelty: 6\nDepth: 0", "Novelty: 6\nDepth: 0", "Novelty: 6\nDepth: 0"});
    const auto m = an::grade_matrix(exps, {an::GraderPersona::Doctor},
                                    [&](an::GraderPersona) -> CompletionProvider& { return doctor; });
    REQUIRE(m.cells.size() == 2);
    CHECK(m.cells[0].configuration == "e1");
    CHECK(m.cells[0].mean_novelty == doctest::Approx(3.0));
    CHECK(m.cells[0].mean_depth == doctest::Approx(6.0));
    CHECK(m.cells[1].ideas == 4);
    CHECK(m.to_csv().rfind("configuration,grader,mean_novelty,mean_depth,ideas\n", 0) == 0);
    CHECK(m.to_json()["cells"].size() == 2);
    CHECK(code_of([&] {
            an::grade_matrix({an::Experiment{}}, {an::GraderPersona::Doctor},
                             [&](an::GraderPersona) -> CompletionProvider& { return doctor; });
          }) == ErrorCode::DegenerateInput);
  }

  TEST_CASE("CSV parsing follows RFC 4180 quoting") {
    const auto rows = an::parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,2,3\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "say \"hi\""});
    CHECK(an::csv_escape("x,y") == "\"x,y\"");
    CHECK(an::csv_escape("plain") == "plain");
    const auto ideas = an::read_idea_csv("idea_id,persona,phase,text\n1,Doctor,separate_ideation,\"a, b\"\n");
    REQUIRE(ideas.size() == 1);
    CHECK(ideas[0].text == "a, b");
  }

  TEST_CASE("transcripts load into labelled experiments") {
    using namespace testsupport;
    TempDir dir("analysis");
    Runtime rt(scripted_options(0));
    for (auto sys : {IdeationSystem::Separate, IdeationSystem::Together}) {
      const Session s = rt.engine().create_session(make_config(sys, PersonaId::Doctor, PersonaId::VREngineer, 6, 6));
      const auto t = rt.engine().run_session(s.session_id).transcript;
      std::ofstream(dir.file(std::string(to_string(sys)) + ".json")) << canonical_dump(t);
    }
    const auto exps = an::load_experiments({dir.path()});
    REQUIRE(exps.size() == 2);
    CHECK(exps[0].label == "doctor-vr-engineer-separate");
    CHECK(exps[0].agents == "Doctor x VR Engineer");
    CHECK(exps[0].ideas.size() == 6);
    const auto twice = an::load_experiments({dir.file("separate.json"), dir.file("separate.json")});
    CHECK(twice[1].label == "doctor-vr-engineer-separate-2");
    CHECK(code_of([&] { an::load_experiments({dir.file("missing.json")}); }) == ErrorCode::MalformedTranscript);
    TempDir empty("analysis-empty");
    CHECK(code_of([&] { an::load_experiments({empty.path()}); }) == ErrorCode::NoTranscripts);
    std::ofstream(empty.file("bad.json")) << "{\"session\": 1}";
    CHECK(code_of([&] { an::read_transcript(empty.file("bad.json")); }) == ErrorCode::MalformedTranscript);
  }

  TEST_CASE("analyze writes pca, purity, themes and metadata") {
    testsupport::TempDir dir("report");
    HashedTermFrequencyEmbedder e;
    auto c = an::KeywordThemeClassifier::defaults();
    const auto report = an::analyze({experiment("e1", 4), experiment("e2", 4)}, e, c);
    CHECK(report.pca.points.size() == 16);
    REQUIRE(report.purity.size() == 2);
    CHECK(report.purity[0].cluster_purity == 1.0);
    CHECK(report.themes.personas.size() == 4);
    CHECK(report.themes.personas[0] == "e1/Doctor");
    const auto files = an::write_report(report, dir.path());
    CHECK(files.size() == 3);
    for (const auto& f : files) CHECK(std::filesystem::exists(f));
    CHECK(std::filesystem::exists(dir.path() / "metadata.json"));
    CHECK(an::pca_csv(report.pca).rfind("x,y,persona,label\n", 0) == 0);
    CHECK(an::purity_csv(report.purity).rfind("experiment,agents,ideation_system,cluster_purity\n", 0) == 0);
  }
}
