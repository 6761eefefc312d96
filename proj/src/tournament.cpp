#include "lrmr/tournament.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "lrmr/errors.hpp"
#include "lrmr/io.hpp"
#include "lrmr/rng.hpp"
#include "lrmr/sha256.hpp"

namespace lrmr {

using nlohmann::json;

std::vector<ComparisonTask> schedule_pairs(const std::vector<std::string>& patient_ids,
                                           const SchedulerConfig& config) {
  const int cohort = int(patient_ids.size());
  if (cohort < 2) throw ConfigError("scheduling needs a cohort of at least 2 patients");
  if (config.n_opponents < 1) throw ConfigError("n_opponents must be >= 1");
  if (config.n_opponents >= cohort)
    throw ConfigError("n_opponents " + std::to_string(config.n_opponents) +
                      " must be smaller than the cohort size " + std::to_string(cohort));
  {
    std::set<std::string> unique(patient_ids.begin(), patient_ids.end());
    if (int(unique.size()) != cohort)
      throw DataError("patient ids must be unique within a cohort");
  }

  // Opponent sampling and A/B assignment use separately derived streams:
  // toggling randomize_position must not change which opponents get drawn.
  Rng sample_rng(config.seed);
  Rng position_rng(sha256_seed("positions:" + std::to_string(config.seed)));
  std::vector<ComparisonTask> tasks;
  tasks.reserve(std::size_t(cohort) * config.n_opponents);

  for (const std::string& initiator : patient_ids) {
    std::vector<std::string> others;
    others.reserve(cohort - 1);
    for (const std::string& id : patient_ids)
      if (id != initiator) others.push_back(id);

    // Partial Fisher-Yates: the first n_opponents slots are a uniform
    // without-replacement sample.
    for (int j = 0; j < config.n_opponents; ++j) {
      const std::size_t pick = j + std::size_t(sample_rng.below(others.size() - j));
      std::swap(others[j], others[pick]);
    }
    for (int j = 0; j < config.n_opponents; ++j) {
      ComparisonTask task;
      task.task_id = long(tasks.size());
      task.initiator = initiator;
      task.opponent = others[j];
      task.initiator_is_a = config.randomize_position ? position_rng.coin() : true;
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

std::vector<ComparisonTask> schedule_round_robin(const std::vector<std::string>& patient_ids) {
  if (patient_ids.size() < 2)
    throw ConfigError("round robin needs a cohort of at least 2 patients");
  std::vector<ComparisonTask> tasks;
  for (std::size_t i = 0; i < patient_ids.size(); ++i)
    for (std::size_t j = i + 1; j < patient_ids.size(); ++j) {
      ComparisonTask task;
      task.task_id = long(tasks.size());
      task.initiator = patient_ids[i];
      task.opponent = patient_ids[j];
      task.initiator_is_a = true;
      tasks.push_back(std::move(task));
    }
  return tasks;
}

std::string outcome_journal_line(const ComparisonOutcome& outcome) {
  json j;
  j["task_id"] = outcome.task_id;
  j["initiator"] = outcome.initiator;
  j["opponent"] = outcome.opponent;
  j["position_map"] = {
      {"A", outcome.initiator_is_a ? outcome.initiator : outcome.opponent},
      {"B", outcome.initiator_is_a ? outcome.opponent : outcome.initiator}};
  j["choice"] = outcome.choice ? choice_name(*outcome.choice) : "Invalid";
  j["analysis"] = outcome.analysis;
  return j.dump();
}

namespace {

// Append-only journal whose lines commit in task_id order regardless of the
// order workers finish in, so reruns produce identical bytes.
class OrderedJournal {
 public:
  explicit OrderedJournal(const std::filesystem::path& path) {
    if (path.empty()) return;
    if (path.has_parent_path()) ensure_directory(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw InputError("cannot open journal " + path.string());
    enabled_ = true;
  }

  void commit(long task_id, std::string line) {
    if (!enabled_) return;
    std::lock_guard<std::mutex> lock(mu_);
    pending_.emplace(task_id, std::move(line));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      out_ << pending_.begin()->second << "\n";
      pending_.erase(pending_.begin());
      ++next_;
    }
    out_.flush();
  }

 private:
  bool enabled_ = false;
  std::ofstream out_;
  std::mutex mu_;
  std::map<long, std::string> pending_;
  long next_ = 0;
};

ComparisonOutcome resolve(const ComparisonTask& task, const TaskJudgment& judgment) {
  ComparisonOutcome outcome;
  outcome.task_id = task.task_id;
  outcome.initiator = task.initiator;
  outcome.opponent = task.opponent;
  outcome.initiator_is_a = task.initiator_is_a;
  if (!judgment.valid) return outcome;
  outcome.choice = judgment.choice;
  outcome.analysis = judgment.analysis;
  if (judgment.choice == Choice::A) {
    outcome.winner = task.patient_a();
    outcome.loser = task.patient_b();
  } else if (judgment.choice == Choice::B) {
    outcome.winner = task.patient_b();
    outcome.loser = task.patient_a();
  }
  return outcome;
}

}  // namespace

std::vector<ComparisonOutcome> run_tournament(const std::vector<ComparisonTask>& tasks,
                                              const PairJudge& judge,
                                              const TournamentOptions& options) {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].task_id != long(i))
      throw ValidationError("task ids must be dense from 0");
    if (tasks[i].initiator == tasks[i].opponent)
      throw ValidationError("self-pair in task " + std::to_string(i));
  }

  OrderedJournal journal(options.journal_path);
  std::vector<ComparisonOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) return;
      ComparisonOutcome outcome;
      try {
        outcome = resolve(tasks[i], judge(tasks[i]));
      } catch (const JudgeFailure&) {
        outcome = resolve(tasks[i], TaskJudgment{false, Choice::Comparable, "", false});
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      journal.commit(tasks[i].task_id, outcome_journal_line(outcome));
      outcomes[i] = std::move(outcome);
    }
  };

  const int threads = std::max(1, std::min<int>(options.max_in_flight, int(tasks.size())));
  if (threads == 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return outcomes;
}

PairJudge make_report_pair_judge(
    const std::map<std::string, StructuredReport>& reports,
    const PromptTemplates& templates,
    std::function<std::pair<std::string, bool>(const PromptText&)> invoke) {
  return [&reports, templates, invoke = std::move(invoke)](const ComparisonTask& task) {
    const auto a = reports.find(task.patient_a());
    const auto b = reports.find(task.patient_b());
    if (a == reports.end() || b == reports.end())
      throw DataError("task " + std::to_string(task.task_id) +
                      " references a patient without a report");
    const PromptText prompt = build_stage2_prompt(a->second, b->second, templates);
    const auto [raw, cache_hit] = invoke(prompt);
    const ComparisonVerdict verdict = parse_comparison(raw);
    return TaskJudgment{true, verdict.choice, verdict.analysis, cache_hit};
  };
}

std::vector<RiskScore> aggregate_scores(const std::vector<ComparisonOutcome>& outcomes,
                                        const std::vector<std::string>& patient_ids,
                                        const AggregateOptions& options) {
  std::map<std::string, std::size_t> index;
  std::vector<RiskScore> scores;
  scores.reserve(patient_ids.size());
  for (const auto& id : patient_ids) {
    if (!index.emplace(id, scores.size()).second)
      throw DataError("duplicate patient id " + id);
    scores.push_back(RiskScore{id});
  }

  auto at = [&](const std::string& id) -> RiskScore& {
    const auto it = index.find(id);
    if (it == index.end()) throw DataError("outcome references unknown patient " + id);
    return scores[it->second];
  };

  for (const auto& outcome : outcomes) {
    RiskScore& initiator = at(outcome.initiator);
    RiskScore& opponent = at(outcome.opponent);
    if (outcome.invalid()) {
      initiator.invalids++;
      if (options.credit_opponent) opponent.invalids++;
    } else if (*outcome.choice == Choice::Comparable) {
      initiator.comparables++;
      if (options.credit_opponent) opponent.comparables++;
    } else {
      RiskScore& winner = at(outcome.winner);
      RiskScore& loser = at(outcome.loser);
      if (options.credit_opponent) {
        winner.wins++;
        loser.losses++;
      } else if (outcome.winner == outcome.initiator) {
        winner.wins++;
      } else {
        loser.losses++;
      }
    }
  }
  return scores;
}

std::vector<std::string> rank_patients(const std::vector<RiskScore>& scores) {
  std::vector<const RiskScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const RiskScore* a, const RiskScore* b) {
    if (a->net() != b->net()) return a->net() > b->net();
    if (a->wins != b->wins) return a->wins > b->wins;
    return a->patient_id < b->patient_id;
  });
  std::vector<std::string> ranked;
  ranked.reserve(order.size());
  for (const auto* s : order) ranked.push_back(s->patient_id);
  return ranked;
}

RuleWeights default_rule_weights() {
  RuleWeights weights;
  for (FeatureId f : all_features()) weights[f] = 1;
  weights[FeatureId::necrosis] = 3;
  weights[FeatureId::border_contour] = 2;
  weights[FeatureId::border_clarity] = 2;
  weights[FeatureId::fatty_hilum_absence] = 2;
  return weights;
}

long long rule_based_score(const StructuredReport& report, const RuleWeights& weights) {
  if (report.mode != ReportMode::structured)
    throw ValidationError("rule-based scoring requires a structured report");
  long long score = 0;
  for (const auto& finding : report.findings) {
    const auto it = weights.find(finding.feature);
    const int w = it == weights.end() ? 1 : it->second;
    score += static_cast<long long>(w) * static_cast<long long>(finding.abnormal_nodes.size());
  }
  return score;
}

}  // namespace lrmr
