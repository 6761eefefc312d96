#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrmr/evaluation.hpp"
#include "lrmr/judge.hpp"
#include "lrmr/montage.hpp"
#include "lrmr/report.hpp"
#include "lrmr/simulation.hpp"
#include "lrmr/tournament.hpp"

namespace lrmr {

// Everything a run needs; the CLI fills this from flags and the config file.
struct PipelineOptions {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir = "out";
  std::filesystem::path prompts_dir;  // empty = built-in templates
  BackendConfig backend;
  SchedulerConfig scheduler;
  MontageConfig montage;
  ReportMode prompt_mode = ReportMode::structured;
  double train_frac = 0.7;
  std::uint64_t split_seed = 0;
  bool credit_opponent = true;
  double invalid_limit = 0.10;  // max tolerated invalid fraction in rank
  ThresholdObjective objective = ThresholdObjective::f1;
  RuleWeights rule_weights = default_rule_weights();
};

PromptTemplates pipeline_templates(const PipelineOptions& options);

// dataset/{patient_id}/nodes/{index:03}.png, sorted by patient id.
std::vector<PatientRecord> load_dataset(const std::filesystem::path& dataset_dir);

// dataset/labels.csv with header patient_id,label.
std::map<std::string, int> load_labels_csv(const std::filesystem::path& path);

// scores file with a header naming either a net or a score column.
std::map<std::string, double> load_scores_csv(const std::filesystem::path& path);

struct StageSummary {
  long patients = 0;
  long tasks = 0;
  long invalids = 0;
  long invocations = 0;
  long cache_hits = 0;
  long network_calls = 0;
};

// out/montages/{pid}.montage.png + .montage.json for every patient.
StageSummary cmd_montage(const PipelineOptions& options);

// Stage-one judging of every montage into out/reports/{pid}.report.json.
StageSummary cmd_report(const PipelineOptions& options);

// Stage two: schedule, judge, journal to comparisons.jsonl, scores.csv.
StageSummary cmd_rank(const PipelineOptions& options);

// Rule-based scoring of the stage-one reports into rule_scores.csv.
StageSummary cmd_ablate_rule_score(const PipelineOptions& options);

// labels.csv -> split.json.
Split cmd_split(const PipelineOptions& options);

struct EvaluationOutput {
  ConfusionMatrix confusion;
  Metrics metrics;
  AucValue auc;
  Threshold threshold;
};

EvaluationOutput cmd_evaluate(const PipelineOptions& options,
                              const std::filesystem::path& scores_path,
                              const std::filesystem::path& labels_path,
                              const std::filesystem::path& split_path,
                              const std::filesystem::path& metrics_out);

SimulationResult cmd_simulate(const PipelineOptions& options, const SimulationConfig& sim);

struct RunAllResult {
  StageSummary montage;
  StageSummary report;
  StageSummary rank;
  EvaluationOutput evaluation;
  EvaluationOutput rule_evaluation;
  bool invalid_limit_exceeded = false;
};

// Full chain: montage, report, rank, ablate, split, evaluate both score
// routes, then write the run manifest.
RunAllResult cmd_run_all(const PipelineOptions& options);

// Manifest: config snapshot (no secrets), seeds, counts, artifact paths.
// Written atomically; every artifact it names must exist.
void write_manifest(const PipelineOptions& options, const StageSummary& totals,
                    const std::vector<std::filesystem::path>& artifacts);

}  // namespace lrmr
