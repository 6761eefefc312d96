#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/evaluation.hpp"
#include "lrmr/simulation.hpp"
#include "lrmr/tournament.hpp"

using namespace lrmr;

TEST_CASE("generate_cohort is deterministic") {
  const SyntheticCohort a = generate_cohort(40, 2, 6, 77);
  const SyntheticCohort b = generate_cohort(40, 2, 6, 77);
  REQUIRE(a.patients.size() == 40);
  for (std::size_t i = 0; i < a.patients.size(); ++i) {
    CHECK(a.patients[i].patient_id == b.patients[i].patient_id);
    CHECK(a.patients[i].latent_risk == b.patients[i].latent_risk);
    CHECK(a.patients[i].label == b.patients[i].label);
    CHECK(a.patients[i].flags == b.patients[i].flags);
    CHECK(a.patients[i].flags.size() >= 2);
    CHECK(a.patients[i].flags.size() <= 6);
  }
  const SyntheticCohort c = generate_cohort(40, 2, 6, 78);
  CHECK(c.patients[0].latent_risk != a.patients[0].latent_risk);
}

TEST_CASE("zero latent risk draws zero abnormal flags") {
  Rng rng(1);
  const NodeFeatureFlags flags = draw_flags(0.0, 8, rng);
  for (const auto& node : flags)
    for (bool f : node) CHECK_FALSE(f);
}

TEST_CASE("median labeling gives an even cohort exactly half positives") {
  const SyntheticCohort cohort = generate_cohort(100, 3, 5, 5);
  int positives = 0;
  for (const auto& p : cohort.patients) positives += p.label;
  CHECK(positives == 50);

  // Label coherence: latent risk separates the labels perfectly.
  std::vector<double> risks;
  std::vector<int> labels;
  for (const auto& p : cohort.patients) {
    risks.push_back(p.latent_risk);
    labels.push_back(p.label);
  }
  CHECK(compute_auc(risks, labels) == 1.0);
}

TEST_CASE("cohort reports are schema-valid and echo the flags") {
  const SyntheticCohort cohort = generate_cohort(10, 2, 4, 9);
  const auto reports = cohort_reports(cohort);
  REQUIRE(reports.size() == 10);
  for (const auto& patient : cohort.patients) {
    const StructuredReport& report = reports.at(patient.patient_id);
    CHECK(validate_report(report, int(patient.flags.size())).ok());
    long flagged = 0;
    for (const auto& node : patient.flags)
      for (bool f : node) flagged += f ? 1 : 0;
    long cited = 0;
    for (const auto& finding : report.findings) cited += long(finding.abnormal_nodes.size());
    CHECK(cited == flagged);
  }
}

TEST_CASE("bt_choice respects the comparable band and the sign rule") {
  OracleConfig band;
  band.epsilon = 0.1;
  CHECK(bt_choice(0.5, 0.5, band, 1) == Choice::Comparable);
  CHECK(bt_choice(0.55, 0.5, band, 1) == Choice::Comparable);

  OracleConfig noiseless;
  noiseless.noiseless = true;
  noiseless.epsilon = 0.0;
  CHECK(bt_choice(0.9, 0.3, noiseless, 1) == Choice::A);
  CHECK(bt_choice(0.3, 0.9, noiseless, 1) == Choice::B);
  CHECK(bt_choice(0.4, 0.4, noiseless, 1) == Choice::Comparable);

  OracleConfig bad;
  bad.beta = 0.0;
  CHECK_THROWS_AS(validate_oracle_config(bad), ConfigError);
}

TEST_CASE("bt_choice is deterministic per seed and near its logistic rate") {
  OracleConfig oracle;
  oracle.beta = 4.0;
  CHECK(bt_choice(0.7, 0.4, oracle, 42) == bt_choice(0.7, 0.4, oracle, 42));

  const double delta = 0.3;
  const double expected = 1.0 / (1.0 + std::exp(-oracle.beta * delta));
  int wins_first = 0, losses_second = 0;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    if (bt_choice(0.7, 0.4, oracle, s) == Choice::A) ++wins_first;
    if (bt_choice(0.4, 0.7, oracle, s) == Choice::B) ++losses_second;
  }
  const double sigma = std::sqrt(expected * (1 - expected) / trials);
  CHECK(std::abs(double(wins_first) / trials - expected) < 5 * sigma);
  // Swapping the arguments complements the win probability.
  CHECK(std::abs(double(wins_first - losses_second)) / trials < 5 * sigma);
}

TEST_CASE("very large beta effectively always prefers the riskier patient") {
  OracleConfig oracle;
  oracle.beta = 200.0;  // sigmoid(60) leaves no realistic chance of a flip
  for (int s = 0; s < 500; ++s) CHECK(bt_choice(0.8, 0.5, oracle, s) == Choice::A);
}

TEST_CASE("noiseless full-coverage simulation recovers the latent order exactly") {
  SimulationConfig config;
  config.patients = 12;
  config.n_opponents = 11;
  config.oracle.noiseless = true;
  config.oracle.epsilon = 0.0;
  config.seed = 0;
  const SimulationResult result = run_simulation(config);
  CHECK(result.spearman == doctest::Approx(1.0));
  CHECK(result.auc == 1.0);
  CHECK(result.task_count == 12 * 11);
}

TEST_CASE("an epsilon covering every gap yields all comparable outcomes") {
  SimulationConfig config;
  config.patients = 10;
  config.n_opponents = 4;
  config.oracle.epsilon = 10.0;
  config.seed = 3;
  const SimulationResult result = run_simulation(config);
  for (const auto& s : result.scores) {
    CHECK(s.net() == 0);
    CHECK(s.wins == 0);
    CHECK(s.losses == 0);
  }
  CHECK(result.auc == 0.5);
}

TEST_CASE("noiseless sign judge with round robin sorts by latent risk") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticCohort cohort = generate_cohort(15, 2, 4, seed);
    std::map<std::string, double> risk;
    for (const auto& p : cohort.patients) risk[p.patient_id] = p.latent_risk;

    const PairJudge judge = [&](const ComparisonTask& task) {
      const Choice c = bt_choice(risk.at(task.patient_a()), risk.at(task.patient_b()),
                                 {1.0, 0.0, true}, 0);
      return TaskJudgment{true, c, "", false};
    };
    const auto outcomes = run_tournament(schedule_round_robin(cohort.ids()), judge);
    const auto ranked = rank_patients(aggregate_scores(outcomes, cohort.ids()));

    auto expected = cohort.ids();
    std::sort(expected.begin(), expected.end(),
              [&](const auto& a, const auto& b) { return risk.at(a) > risk.at(b); });
    CHECK(ranked == expected);
  }
}

TEST_CASE("simulation results are reproducible across runs") {
  SimulationConfig config;
  config.patients = 30;
  config.n_opponents = 4;
  config.oracle.beta = 8.0;
  config.oracle.epsilon = 0.02;
  config.seed = 11;
  const SimulationResult a = run_simulation(config);
  const SimulationResult b = run_simulation(config);
  CHECK(a.auc == b.auc);
  CHECK(a.spearman == b.spearman);
  for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(a.scores[i].net() == b.scores[i].net());
}
