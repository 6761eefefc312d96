#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrmr/prompting.hpp"
#include "lrmr/report.hpp"

namespace lrmr {

struct SchedulerConfig {
  int n_opponents = 6;
  std::uint64_t seed = 0;
  bool randomize_position = true;
};

struct ComparisonTask {
  long task_id = 0;
  std::string initiator;
  std::string opponent;
  bool initiator_is_a = true;  // position map: who is presented as Patient A

  const std::string& patient_a() const { return initiator_is_a ? initiator : opponent; }
  const std::string& patient_b() const { return initiator_is_a ? opponent : initiator; }
};

// Per-initiator opponent sampling without replacement from a seeded stream;
// identical ids + config reproduce the schedule byte for byte.
std::vector<ComparisonTask> schedule_pairs(const std::vector<std::string>& patient_ids,
                                           const SchedulerConfig& config);

// Every unordered pair exactly once, earlier id presented as Patient A.
std::vector<ComparisonTask> schedule_round_robin(const std::vector<std::string>& patient_ids);

// What a judge returns for one task. valid=false marks an Invalid outcome.
struct TaskJudgment {
  bool valid = true;
  Choice choice = Choice::Comparable;
  std::string analysis;
  bool cache_hit = false;
};

using PairJudge = std::function<TaskJudgment(const ComparisonTask&)>;

struct ComparisonOutcome {
  long task_id = 0;
  std::string initiator;
  std::string opponent;
  bool initiator_is_a = true;
  std::optional<Choice> choice;  // nullopt = Invalid
  std::string analysis;

  // A/B resolved to patient ids; empty unless the verdict is decisive.
  std::string winner;
  std::string loser;

  bool invalid() const { return !choice.has_value(); }
};

std::string outcome_journal_line(const ComparisonOutcome& outcome);

struct TournamentOptions {
  int max_in_flight = 4;
  // Optional append-only journal; lines are committed in task_id order no
  // matter which worker finishes first.
  std::filesystem::path journal_path;
};

// Runs every task through `judge`. A JudgeFailure from the judge marks that
// task Invalid and the run continues; other exceptions abort. The returned
// list is sorted by task_id and independent of completion order.
std::vector<ComparisonOutcome> run_tournament(const std::vector<ComparisonTask>& tasks,
                                              const PairJudge& judge,
                                              const TournamentOptions& options = {});

// Prompt-driven judge: build_stage2_prompt per the task's position map, one
// judge call, parse_comparison. `invoke` maps a prompt to raw judge text.
PairJudge make_report_pair_judge(
    const std::map<std::string, StructuredReport>& reports,
    const PromptTemplates& templates,
    std::function<std::pair<std::string, bool>(const PromptText&)> invoke);

struct RiskScore {
  std::string patient_id;
  long wins = 0;
  long losses = 0;
  long comparables = 0;
  long invalids = 0;

  long net() const { return wins - losses; }
};

struct AggregateOptions {
  // Credit the sampled opponent's tally as well as the initiator's.
  bool credit_opponent = true;
};

// Tallies outcomes into per-patient scores, in patient_ids order. Patients
// without outcomes get all-zero scores; unknown ids in outcomes -> DataError.
std::vector<RiskScore> aggregate_scores(const std::vector<ComparisonOutcome>& outcomes,
                                        const std::vector<std::string>& patient_ids,
                                        const AggregateOptions& options = {});

// Descending net, then descending wins, then ascending patient_id.
std::vector<std::string> rank_patients(const std::vector<RiskScore>& scores);

using RuleWeights = std::map<FeatureId, int>;

// necrosis 3; border_contour, border_clarity, fatty_hilum_absence 2; rest 1.
RuleWeights default_rule_weights();

// Sum over features of weight * |abnormal nodes|; structured reports only.
// Features absent from `weights` count with weight 1.
long long rule_based_score(const StructuredReport& report, const RuleWeights& weights);

}  // namespace lrmr
