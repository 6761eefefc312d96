#include "lrmr/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "lrmr/errors.hpp"
#include "lrmr/evaluation.hpp"
#include "lrmr/rng.hpp"
#include "lrmr/sha256.hpp"

namespace lrmr {

namespace {

// How strongly each feature responds to latent risk, canonical order.
constexpr double kFeatureSalience[kFeatureCount] = {
    0.50,  // shape
    0.45,  // border_contour
    0.40,  // border_clarity
    0.45,  // signal_heterogeneity
    0.35,  // fatty_hilum_absence
    0.30,  // necrosis
    0.40,  // size_impression
    0.35,  // relative_signal_intensity
    0.25,  // perinodal_fat_stranding
    0.30,  // node_clustering
};

std::string synthetic_id(int ordinal, int cohort_size) {
  const std::string width = std::to_string(cohort_size);
  std::string digits = std::to_string(ordinal);
  return "sim" + std::string(width.size() - digits.size(), '0') + digits;
}

}  // namespace

std::vector<std::string> SyntheticCohort::ids() const {
  std::vector<std::string> out;
  out.reserve(patients.size());
  for (const auto& p : patients) out.push_back(p.patient_id);
  return out;
}

NodeFeatureFlags draw_flags(double latent_risk, int nodes, Rng& rng) {
  NodeFeatureFlags flags(static_cast<std::size_t>(nodes));
  for (auto& node_flags : flags)
    for (int f = 0; f < kFeatureCount; ++f)
      node_flags[f] = rng.unit() < latent_risk * kFeatureSalience[f];
  return flags;
}

SyntheticCohort generate_cohort(int m, int nodes_min, int nodes_max, std::uint64_t seed) {
  if (m < 2) throw ConfigError("synthetic cohort needs at least 2 patients");
  if (nodes_min < 1 || nodes_max < nodes_min)
    throw ConfigError("node count range must satisfy 1 <= min <= max");

  Rng rng(seed);
  SyntheticCohort cohort;
  cohort.seed = seed;
  cohort.patients.reserve(m);
  for (int i = 1; i <= m; ++i) {
    SyntheticPatient patient;
    patient.patient_id = synthetic_id(i, m);
    patient.latent_risk = rng.unit();
    const int nodes = int(rng.range(nodes_min, nodes_max));
    patient.flags = draw_flags(patient.latent_risk, nodes, rng);
    cohort.patients.push_back(std::move(patient));
  }

  // Median labeling: label 1 iff latent_risk >= cohort median.
  std::vector<double> risks;
  risks.reserve(m);
  for (const auto& p : cohort.patients) risks.push_back(p.latent_risk);
  std::sort(risks.begin(), risks.end());
  const double median = m % 2 == 1 ? risks[m / 2] : (risks[m / 2 - 1] + risks[m / 2]) / 2.0;
  for (auto& p : cohort.patients) p.label = p.latent_risk >= median ? 1 : 0;
  return cohort;
}

std::map<std::string, StructuredReport> cohort_reports(const SyntheticCohort& cohort) {
  std::map<std::string, StructuredReport> reports;
  for (const auto& patient : cohort.patients) {
    const std::string raw = mock_describe(patient.flags);
    reports[patient.patient_id] =
        parse_structured_report(raw, patient.patient_id, int(patient.flags.size()));
  }
  return reports;
}

void validate_oracle_config(const OracleConfig& config) {
  if (!config.noiseless && !(config.beta > 0.0))
    throw ConfigError("oracle beta must be positive");
  if (config.epsilon < 0.0) throw ConfigError("oracle epsilon must be >= 0");
}

Choice bt_choice(double risk_a, double risk_b, const OracleConfig& config,
                 std::uint64_t task_seed) {
  validate_oracle_config(config);
  const double delta = risk_a - risk_b;
  if (std::abs(delta) < config.epsilon) return Choice::Comparable;
  if (config.noiseless) {
    if (delta == 0.0) return Choice::Comparable;
    return delta > 0.0 ? Choice::A : Choice::B;
  }
  const double p_a = 1.0 / (1.0 + std::exp(-config.beta * delta));
  Rng rng(task_seed);
  return rng.unit() < p_a ? Choice::A : Choice::B;
}

std::uint64_t derive_task_seed(std::uint64_t run_seed, long task_id) {
  return sha256_seed("task:" + std::to_string(run_seed) + ":" + std::to_string(task_id));
}

SimulationResult run_simulation(const SimulationConfig& config) {
  validate_oracle_config(config.oracle);
  SimulationResult result;
  result.cohort =
      generate_cohort(config.patients, config.nodes_min, config.nodes_max, config.seed);
  const std::vector<std::string> ids = result.cohort.ids();

  std::map<std::string, double> risk_by_id;
  for (const auto& p : result.cohort.patients) risk_by_id[p.patient_id] = p.latent_risk;

  SchedulerConfig scheduler;
  scheduler.n_opponents = config.n_opponents;
  scheduler.seed = sha256_seed("sim-schedule:" + std::to_string(config.seed));
  scheduler.randomize_position = true;
  const std::vector<ComparisonTask> tasks = schedule_pairs(ids, scheduler);
  result.task_count = long(tasks.size());

  const OracleConfig oracle = config.oracle;
  const std::uint64_t run_seed = config.seed;
  PairJudge judge = [&risk_by_id, oracle, run_seed](const ComparisonTask& task) {
    const double risk_a = risk_by_id.at(task.patient_a());
    const double risk_b = risk_by_id.at(task.patient_b());
    const Choice choice =
        bt_choice(risk_a, risk_b, oracle, derive_task_seed(run_seed, task.task_id));
    return TaskJudgment{true, choice, "", false};
  };

  const std::vector<ComparisonOutcome> outcomes = run_tournament(tasks, judge);
  result.scores = aggregate_scores(outcomes, ids);

  std::vector<double> nets, risks;
  std::vector<int> labels;
  for (std::size_t i = 0; i < result.cohort.patients.size(); ++i) {
    nets.push_back(double(result.scores[i].net()));
    risks.push_back(result.cohort.patients[i].latent_risk);
    labels.push_back(result.cohort.patients[i].label);
  }
  result.spearman = spearman_rho(nets, risks);
  result.auc = compute_auc(nets, labels);
  return result;
}

}  // namespace lrmr
