#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrmr/judge.hpp"
#include "lrmr/prompting.hpp"
#include "lrmr/rng.hpp"
#include "lrmr/tournament.hpp"

namespace lrmr {

struct SyntheticPatient {
  std::string patient_id;
  double latent_risk = 0.0;  // uniform(0,1)
  int label = 0;             // 1 iff latent_risk >= cohort median
  NodeFeatureFlags flags;
};

struct SyntheticCohort {
  std::vector<SyntheticPatient> patients;
  std::uint64_t seed = 0;

  std::vector<std::string> ids() const;
};

// Latent risk uniform, node count uniform in [nodes_min, nodes_max], each
// node's abnormal flag per feature drawn with probability
// latent_risk * feature salience. Deterministic given seed.
SyntheticCohort generate_cohort(int m, int nodes_min, int nodes_max, std::uint64_t seed);

// The generative rule for one patient's flags; zero risk means zero flags.
NodeFeatureFlags draw_flags(double latent_risk, int nodes, Rng& rng);

// Stage-one reports the mock judge would emit for these flags.
std::map<std::string, StructuredReport> cohort_reports(const SyntheticCohort& cohort);

struct OracleConfig {
  double beta = 8.0;       // logistic noise scale
  double epsilon = 0.0;    // |risk difference| below this -> Comparable
  bool noiseless = false;  // sign rule instead of logistic sampling
};

void validate_oracle_config(const OracleConfig& config);

// Bradley-Terry comparator: Comparable inside the epsilon band, otherwise A
// with probability sigmoid(beta * (risk_a - risk_b)). Deterministic given
// task_seed.
Choice bt_choice(double risk_a, double risk_b, const OracleConfig& config,
                 std::uint64_t task_seed);

// Per-task seed derived by hashing (run seed, task id): reproducible no
// matter what order tasks execute in.
std::uint64_t derive_task_seed(std::uint64_t run_seed, long task_id);

struct SimulationConfig {
  int patients = 100;
  int n_opponents = 6;
  int nodes_min = 3;
  int nodes_max = 8;
  OracleConfig oracle;
  std::uint64_t seed = 0;
};

struct SimulationResult {
  SyntheticCohort cohort;
  std::vector<RiskScore> scores;  // aligned with cohort.patients
  double spearman = 0.0;          // nets vs latent risks
  double auc = 0.0;               // nets vs labels
  long task_count = 0;
};

// Full pipeline on a synthetic cohort: schedule, judge with the oracle,
// aggregate, score against ground truth.
SimulationResult run_simulation(const SimulationConfig& config);

}  // namespace lrmr
