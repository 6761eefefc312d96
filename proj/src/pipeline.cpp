#include "lrmr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <ctime>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "lrmr/errors.hpp"
#include "lrmr/io.hpp"
#include "lrmr/version.hpp"

namespace lrmr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string double_repr(double v) { return json(v).dump(); }

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? json("+inf") : json("-inf");
  return json(v);
}

json metric_entry(const Ratio& r) {
  json j;
  j["fixed4"] = r.fixed4();
  j["value"] = r.value();
  return j;
}

StageSummary snapshot_stats(const JudgeClient& client, StageSummary summary) {
  summary.invocations = client.stats().invocations.load();
  summary.cache_hits = client.stats().cache_hits.load();
  summary.network_calls = client.stats().network_calls.load();
  return summary;
}

struct LoadedMontage {
  std::string patient_id;
  int node_count = 0;
  std::vector<std::uint8_t> png;
};

std::vector<LoadedMontage> load_montages(const fs::path& montage_dir) {
  if (!fs::is_directory(montage_dir))
    throw InputError("montage directory not found: " + montage_dir.string() +
                     " (run the montage stage first)");
  std::vector<fs::path> sidecars;
  for (const auto& entry : fs::directory_iterator(montage_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 13 && name.substr(name.size() - 13) == ".montage.json")
      sidecars.push_back(entry.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  if (sidecars.empty()) throw InputError("no montage sidecars in " + montage_dir.string());

  std::vector<LoadedMontage> montages;
  montages.reserve(sidecars.size());
  for (const auto& sidecar : sidecars) {
    LoadedMontage m;
    const std::string stem = sidecar.filename().string();
    m.patient_id = stem.substr(0, stem.size() - 13);
    m.node_count = node_count_from_sidecar(read_text_file(sidecar));
    m.png = read_binary_file(montage_dir / (m.patient_id + ".montage.png"));
    montages.push_back(std::move(m));
  }
  return montages;
}

std::map<std::string, StructuredReport> load_reports(const fs::path& report_dir) {
  if (!fs::is_directory(report_dir))
    throw InputError("report directory not found: " + report_dir.string() +
                     " (run the report stage first)");
  std::map<std::string, StructuredReport> reports;
  for (const auto& entry : fs::directory_iterator(report_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".report.json") {
      StructuredReport report = load_report(read_text_file(entry.path()));
      const std::string from_name = name.substr(0, name.size() - 12);
      if (report.patient_id != from_name)
        throw DataError("report file " + name + " carries patient_id " + report.patient_id);
      reports.emplace(report.patient_id, std::move(report));
    }
  }
  if (reports.empty()) throw InputError("no report files in " + report_dir.string());
  return reports;
}

std::vector<std::string> sorted_keys(const std::map<std::string, StructuredReport>& reports) {
  std::vector<std::string> ids;
  ids.reserve(reports.size());
  for (const auto& [id, report] : reports) ids.push_back(id);
  return ids;
}

void write_scores_csv(const fs::path& path, const std::vector<RiskScore>& scores) {
  std::string csv = csv_line({"patient_id", "wins", "losses", "comparables", "invalids", "net"});
  for (const auto& s : scores)
    csv += csv_line({s.patient_id, std::to_string(s.wins), std::to_string(s.losses),
                     std::to_string(s.comparables), std::to_string(s.invalids),
                     std::to_string(s.net())});
  atomic_write_file(path, csv);
}

}  // namespace

PromptTemplates pipeline_templates(const PipelineOptions& options) {
  if (options.prompts_dir.empty()) return PromptTemplates::builtin();
  return PromptTemplates::load_dir(options.prompts_dir);
}

std::vector<PatientRecord> load_dataset(const fs::path& dataset_dir) {
  if (!fs::is_directory(dataset_dir))
    throw InputError("dataset directory not found: " + dataset_dir.string());

  std::vector<fs::path> patient_dirs;
  for (const auto& entry : fs::directory_iterator(dataset_dir))
    if (entry.is_directory()) patient_dirs.push_back(entry.path());
  std::sort(patient_dirs.begin(), patient_dirs.end());
  if (patient_dirs.empty())
    throw InputError("dataset has no patient directories: " + dataset_dir.string());

  std::vector<PatientRecord> patients;
  patients.reserve(patient_dirs.size());
  for (const auto& dir : patient_dirs) {
    PatientRecord patient;
    patient.patient_id = dir.filename().string();
    const fs::path nodes_dir = dir / "nodes";
    if (!fs::is_directory(nodes_dir))
      throw InputError("patient " + patient.patient_id + " has no nodes/ directory");

    std::vector<std::pair<int, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(nodes_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() < 5 || name.substr(name.size() - 4) != ".png") continue;
      const std::string stem = name.substr(0, name.size() - 4);
      if (stem.empty() ||
          !std::all_of(stem.begin(), stem.end(),
                       [](unsigned char c) { return std::isdigit(c); }))
        throw InputError("unexpected patch file name " + name + " for patient " +
                         patient.patient_id);
      files.emplace_back(std::stoi(stem), entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw InputError("patient " + patient.patient_id + " has no node patches");

    for (std::size_t i = 0; i < files.size(); ++i) {
      if (files[i].first != int(i) + 1)
        throw InputError("patient " + patient.patient_id +
                         " patch indices are not contiguous from 1");
      NodePatch patch;
      patch.index = files[i].first;
      try {
        patch.image = png::decode_gray(read_binary_file(files[i].second));
      } catch (const Error& e) {
        throw InputError("cannot decode patch " + files[i].second.string() + ": " + e.what());
      }
      patient.patches.push_back(std::move(patch));
    }
    patients.push_back(std::move(patient));
  }
  return patients;
}

std::map<std::string, int> load_labels_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "patient_id" ||
      rows[0][1] != "label")
    throw InputError("labels file must start with header patient_id,label: " + path.string());
  std::map<std::string, int> labels;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 2) throw InputError("short row in labels file line " + std::to_string(i + 1));
    const std::string& id = rows[i][0];
    const std::string& value = rows[i][1];
    if (value != "0" && value != "1")
      throw InputError("label for patient " + id + " must be 0 or 1, got " + value);
    if (!labels.emplace(id, value == "1" ? 1 : 0).second)
      throw DataError("duplicate label row for patient " + id);
  }
  if (labels.empty()) throw InputError("labels file has no rows: " + path.string());
  return labels;
}

std::map<std::string, double> load_scores_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw InputError("empty scores file: " + path.string());
  const auto& header = rows[0];
  std::size_t id_col = std::string::npos, score_col = std::string::npos;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "patient_id") id_col = c;
    if (header[c] == "net" || header[c] == "score") score_col = c;
  }
  if (id_col == std::string::npos || score_col == std::string::npos)
    throw InputError("scores file needs patient_id and net/score columns: " + path.string());
  std::map<std::string, double> scores;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() <= std::max(id_col, score_col))
      throw InputError("short row in scores file line " + std::to_string(i + 1));
    if (!scores.emplace(rows[i][id_col], std::stod(rows[i][score_col])).second)
      throw DataError("duplicate score row for patient " + rows[i][id_col]);
  }
  return scores;
}

StageSummary cmd_montage(const PipelineOptions& options) {
  validate_montage_config(options.montage);
  const std::vector<PatientRecord> patients = load_dataset(options.dataset_dir);

  const fs::path montage_dir = options.out_dir / "montages";
  ensure_directory(montage_dir);
  for (const auto& patient : patients) {
    const MontageImage montage = build_montage(patient, options.montage);
    atomic_write_file(montage_dir / (patient.patient_id + ".montage.png"),
                      png::encode_gray(montage.pixels));
    atomic_write_file(montage_dir / (patient.patient_id + ".montage.json"),
                      montage_sidecar_json(montage));
  }
  StageSummary summary;
  summary.patients = long(patients.size());
  return summary;
}

StageSummary cmd_report(const PipelineOptions& options) {
  const PromptTemplates templates = pipeline_templates(options);
  const std::vector<LoadedMontage> montages = load_montages(options.out_dir / "montages");
  const fs::path report_dir = options.out_dir / "reports";
  ensure_directory(report_dir);

  JudgeClient client(make_backend(options.backend), options.backend);
  std::atomic<std::size_t> cursor{0};
  std::mutex failure_mu;
  std::vector<std::string> failures;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= montages.size()) return;
      const LoadedMontage& m = montages[i];
      try {
        const PromptText prompt =
            build_stage1_prompt(m.node_count, options.prompt_mode, templates);
        const JudgeRequest request = make_stage1_request(prompt, m.png, options.backend);
        auto validator = [&](const std::string& raw) {
          if (options.prompt_mode == ReportMode::structured)
            parse_structured_report(raw, m.patient_id, m.node_count);
          else
            parse_freeform_report(raw, m.patient_id, m.node_count);
        };
        const JudgeResponse response = client.invoke(request, validator);
        const StructuredReport report =
            options.prompt_mode == ReportMode::structured
                ? parse_structured_report(response.raw_text, m.patient_id, m.node_count)
                : parse_freeform_report(response.raw_text, m.patient_id, m.node_count);
        atomic_write_file(report_dir / (m.patient_id + ".report.json"),
                          serialize_report(report));
      } catch (const JudgeFailure& e) {
        std::lock_guard<std::mutex> lock(failure_mu);
        failures.push_back(m.patient_id + " (" + e.what() + ")");
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int threads =
      std::max(1, std::min<int>(options.backend.max_in_flight, int(montages.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::string joined;
    for (const auto& f : failures) joined += "\n  " + f;
    throw JudgeFailure("stage-one reporting failed for " + std::to_string(failures.size()) +
                       " patient(s):" + joined);
  }
  StageSummary summary;
  summary.patients = long(montages.size());
  return snapshot_stats(client, summary);
}

StageSummary cmd_rank(const PipelineOptions& options) {
  const PromptTemplates templates = pipeline_templates(options);
  const std::map<std::string, StructuredReport> reports = load_reports(options.out_dir / "reports");
  const std::vector<std::string> ids = sorted_keys(reports);

  const std::vector<ComparisonTask> tasks = schedule_pairs(ids, options.scheduler);
  JudgeClient client(make_backend(options.backend), options.backend);

  PairJudge judge = make_report_pair_judge(
      reports, templates, [&](const PromptText& prompt) -> std::pair<std::string, bool> {
        const JudgeRequest request = make_stage2_request(prompt, options.backend);
        const JudgeResponse response =
            client.invoke(request, [](const std::string& raw) { parse_comparison(raw); });
        return {response.raw_text, response.cache_hit};
      });

  TournamentOptions run_options;
  run_options.max_in_flight = options.backend.max_in_flight;
  run_options.journal_path = options.out_dir / "comparisons.jsonl";
  ensure_directory(options.out_dir);
  const std::vector<ComparisonOutcome> outcomes = run_tournament(tasks, judge, run_options);

  AggregateOptions aggregate_options;
  aggregate_options.credit_opponent = options.credit_opponent;
  const std::vector<RiskScore> scores = aggregate_scores(outcomes, ids, aggregate_options);
  write_scores_csv(options.out_dir / "scores.csv", scores);

  StageSummary summary;
  summary.patients = long(ids.size());
  summary.tasks = long(tasks.size());
  for (const auto& outcome : outcomes)
    if (outcome.invalid()) summary.invalids++;
  return snapshot_stats(client, summary);
}

StageSummary cmd_ablate_rule_score(const PipelineOptions& options) {
  const std::map<std::string, StructuredReport> reports = load_reports(options.out_dir / "reports");
  std::string csv = csv_line({"patient_id", "score"});
  for (const auto& [id, report] : reports)
    csv += csv_line({id, std::to_string(rule_based_score(report, options.rule_weights))});
  atomic_write_file(options.out_dir / "rule_scores.csv", csv);
  StageSummary summary;
  summary.patients = long(reports.size());
  return summary;
}

Split cmd_split(const PipelineOptions& options) {
  const auto labels = load_labels_csv(options.dataset_dir / "labels.csv");
  const Split split = stratified_split(labels, options.train_frac, options.split_seed);
  ensure_directory(options.out_dir);
  atomic_write_file(options.out_dir / "split.json", split_to_json(split));
  return split;
}

EvaluationOutput cmd_evaluate(const PipelineOptions& options, const fs::path& scores_path,
                              const fs::path& labels_path, const fs::path& split_path,
                              const fs::path& metrics_out) {
  const auto scores = load_scores_csv(scores_path);
  const auto labels = load_labels_csv(labels_path);
  const Split split = split_from_json(read_text_file(split_path));

  for (const auto& [id, score] : scores)
    if (!labels.count(id))
      throw ValidationError("labels file is missing scored patient " + id);
  for (const auto& ids : {split.train_ids, split.test_ids})
    for (const auto& id : ids) {
      if (!scores.count(id)) throw ValidationError("no score for split patient " + id);
      if (!labels.count(id)) throw ValidationError("no label for split patient " + id);
    }

  EvaluationOutput out;
  out.threshold = calibrate_threshold(scores, labels, split.train_ids, options.objective);

  std::map<std::string, double> test_scores;
  std::map<std::string, int> test_labels;
  std::vector<double> test_score_vec;
  std::vector<int> test_label_vec;
  for (const auto& id : split.test_ids) {
    test_scores[id] = scores.at(id);
    test_labels[id] = labels.at(id);
    test_score_vec.push_back(scores.at(id));
    test_label_vec.push_back(labels.at(id));
  }
  const auto predictions = classify_with_threshold(test_scores, out.threshold.value);
  out.confusion = confusion_matrix(test_labels, predictions);
  out.metrics = compute_metrics(out.confusion);
  out.auc = compute_auc_exact(test_score_vec, test_label_vec);

  json j;
  j["accuracy"] = metric_entry(out.metrics.accuracy);
  j["precision"] = metric_entry(out.metrics.precision);
  j["recall"] = metric_entry(out.metrics.recall);
  j["f1"] = metric_entry(out.metrics.f1);
  json auc;
  auc["fixed4"] = Ratio(out.auc.num_x2, out.auc.den_x2).fixed4();
  auc["value"] = out.auc.value();
  j["auc"] = std::move(auc);
  j["confusion"] = {{"tp", out.confusion.tp},
                    {"fp", out.confusion.fp},
                    {"fn", out.confusion.fn},
                    {"tn", out.confusion.tn}};
  json threshold;
  threshold["value"] = number_or_inf(out.threshold.value);
  threshold["train_f1"] = metric_entry(out.threshold.train_f1);
  threshold["objective"] = options.objective == ThresholdObjective::f1 ? "f1" : "youden";
  threshold["degenerate"] = out.threshold.degenerate;
  j["threshold"] = std::move(threshold);
  j["counts"] = {{"train", split.train_ids.size()}, {"test", split.test_ids.size()}};
  j["manifest"] = "manifest.json";
  atomic_write_file(metrics_out, j.dump());
  return out;
}

SimulationResult cmd_simulate(const PipelineOptions& options, const SimulationConfig& sim) {
  const SimulationResult result = run_simulation(sim);
  ensure_directory(options.out_dir);

  std::string csv = csv_line({"patient_id", "latent_risk", "label", "net"});
  for (std::size_t i = 0; i < result.cohort.patients.size(); ++i) {
    const auto& p = result.cohort.patients[i];
    csv += csv_line({p.patient_id, double_repr(p.latent_risk), std::to_string(p.label),
                     std::to_string(result.scores[i].net())});
  }
  atomic_write_file(options.out_dir / "simulation.csv", csv);

  json j;
  j["auc"] = result.auc;
  j["spearman"] = result.spearman;
  j["task_count"] = result.task_count;
  j["config"] = {{"patients", sim.patients},
                 {"n_opponents", sim.n_opponents},
                 {"nodes_min", sim.nodes_min},
                 {"nodes_max", sim.nodes_max},
                 {"beta", sim.oracle.beta},
                 {"epsilon", sim.oracle.epsilon},
                 {"noiseless", sim.oracle.noiseless},
                 {"seed", sim.seed}};
  atomic_write_file(options.out_dir / "summary.json", j.dump());

  StageSummary totals;
  totals.patients = sim.patients;
  totals.tasks = result.task_count;
  write_manifest(options, totals,
                 {options.out_dir / "simulation.csv", options.out_dir / "summary.json"});
  return result;
}

RunAllResult cmd_run_all(const PipelineOptions& options) {
  // Inputs that any stage needs are validated before the first artifact.
  load_labels_csv(options.dataset_dir / "labels.csv");

  RunAllResult result;
  result.montage = cmd_montage(options);
  result.report = cmd_report(options);
  result.rank = cmd_rank(options);
  cmd_split(options);
  result.evaluation =
      cmd_evaluate(options, options.out_dir / "scores.csv",
                   options.dataset_dir / "labels.csv", options.out_dir / "split.json",
                   options.out_dir / "metrics.json");
  std::vector<fs::path> artifacts = {options.out_dir / "comparisons.jsonl",
                                     options.out_dir / "scores.csv",
                                     options.out_dir / "split.json",
                                     options.out_dir / "metrics.json"};
  // The rule-score route reads the checklist counts, so it only exists for
  // structured reports.
  if (options.prompt_mode == ReportMode::structured) {
    cmd_ablate_rule_score(options);
    result.rule_evaluation =
        cmd_evaluate(options, options.out_dir / "rule_scores.csv",
                     options.dataset_dir / "labels.csv", options.out_dir / "split.json",
                     options.out_dir / "metrics_rule.json");
    artifacts.push_back(options.out_dir / "rule_scores.csv");
    artifacts.push_back(options.out_dir / "metrics_rule.json");
  }

  StageSummary totals;
  totals.patients = result.montage.patients;
  totals.tasks = result.rank.tasks;
  totals.invalids = result.rank.invalids;
  totals.invocations = result.report.invocations + result.rank.invocations;
  totals.cache_hits = result.report.cache_hits + result.rank.cache_hits;
  totals.network_calls = result.report.network_calls + result.rank.network_calls;
  write_manifest(options, totals, artifacts);

  result.invalid_limit_exceeded =
      totals.tasks > 0 &&
      double(totals.invalids) / double(totals.tasks) > options.invalid_limit;
  return result;
}

void write_manifest(const PipelineOptions& options, const StageSummary& totals,
                    const std::vector<fs::path>& artifacts) {
  json artifact_names = json::array();
  for (const auto& artifact : artifacts) {
    if (!fs::exists(artifact))
      throw DataError("manifest refers to missing artifact " + artifact.string());
    artifact_names.push_back(artifact.filename().string());
  }

  json j;
  j["run_id"] = options.out_dir.filename().empty() ? std::string("run")
                                                   : options.out_dir.filename().string();
  j["tool_version"] = kToolVersion;
  j["prompt_version"] = pipeline_templates(options).version();
  j["backend"] = {{"kind", backend_kind_name(options.backend.kind)},
                  {"model_id", options.backend.model_id},
                  {"temperature", options.backend.temperature},
                  {"endpoint_url", options.backend.endpoint_url},
                  {"max_retries", options.backend.max_retries},
                  {"max_in_flight", options.backend.max_in_flight}};
  j["seeds"] = {{"schedule", options.scheduler.seed}, {"split", options.split_seed}};
  j["counts"] = {{"patients", totals.patients},
                 {"tasks", totals.tasks},
                 {"invalids", totals.invalids},
                 {"invocations", totals.invocations},
                 {"cache_hits", totals.cache_hits},
                 {"network_calls", totals.network_calls}};
  j["prompt_mode"] = mode_name(options.prompt_mode);
  j["credit_opponent"] = options.credit_opponent;
  j["artifacts"] = std::move(artifact_names);
  j["created_unix"] = long(std::time(nullptr));
  atomic_write_file(options.out_dir / "manifest.json", j.dump());
}

}  // namespace lrmr
