#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lrmr/errors.hpp"
#include "lrmr/io.hpp"
#include "lrmr/pipeline.hpp"
#include "lrmr/version.hpp"

namespace {

using namespace lrmr;

RuleWeights load_weights_file(const std::filesystem::path& path) {
  RuleWeights weights = default_rule_weights();
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty()) continue;
    const auto feature = feature_from_name(key);
    if (!feature)
      throw ConfigError("weights file line " + std::to_string(line_no) +
                        ": unknown feature " + key);
    try {
      weights[*feature] = std::stoi(value);
    } catch (...) {
      throw ConfigError("weights file line " + std::to_string(line_no) +
                        ": bad integer " + value);
    }
  }
  return weights;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage lymph-node risk pipeline: montage compositing, structured "
               "judge reports, pairwise relational ranking, and evaluation."};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "Plain key = value config file; flags win");
  app.require_subcommand(1);

  PipelineOptions options;
  std::string backend_name = "mock";
  std::string prompt_mode_name = "structured";
  std::string objective_name = "f1";
  std::string dataset_dir, out_dir = "out", prompts_dir, cache_dir, weights_file;
  std::uint64_t seed = 0;
  bool split_seed_given = false;
  std::uint64_t split_seed = 0;

  SimulationConfig sim;
  std::string scores_path, labels_path, split_path, metrics_out;

  app.add_option("--dataset", dataset_dir, "Dataset root: {patient_id}/nodes/*.png + labels.csv");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Seed for scheduling / simulation")->capture_default_str();
  app.add_option("--split-seed", split_seed, "Seed for the stratified split (default: --seed)")
      ->each([&](const std::string&) { split_seed_given = true; });
  app.add_option("--opponents", options.scheduler.n_opponents, "Opponents sampled per patient")
      ->capture_default_str();
  app.add_option("--backend", backend_name, "Judge backend: http | mock | oracle")
      ->capture_default_str();
  app.add_option("--model", options.backend.model_id, "Model identifier sent to the backend")
      ->capture_default_str();
  app.add_option("--endpoint", options.backend.endpoint_url, "Chat-completion endpoint URL");
  app.add_option("--temperature", options.backend.temperature, "Sampling temperature")
      ->capture_default_str();
  app.add_option("--retries", options.backend.max_retries, "Max retries per judge call")
      ->capture_default_str();
  app.add_option("--in-flight", options.backend.max_in_flight, "Max concurrent judge calls")
      ->capture_default_str();
  app.add_option("--timeout", options.backend.timeout_s, "HTTP timeout, seconds")
      ->capture_default_str();
  app.add_option("--cache", cache_dir, "Response cache directory (default: <out>/cache)");
  app.add_option("--prompts", prompts_dir, "Directory overriding the built-in prompt templates");
  app.add_option("--prompt-mode", prompt_mode_name, "structured | freeform")
      ->capture_default_str();
  app.add_option("--train-frac", options.train_frac, "Training fraction for the split")
      ->capture_default_str();
  app.add_flag("--credit-opponent,!--no-credit-opponent", options.credit_opponent,
               "Credit the sampled opponent's tally too");
  app.add_option("--invalid-limit", options.invalid_limit,
                 "Max tolerated invalid-comparison fraction")
      ->capture_default_str();
  app.add_option("--objective", objective_name, "Threshold objective: f1 | youden")
      ->capture_default_str();
  app.add_option("--weights", weights_file, "Rule-score weights file (feature = integer)");
  app.add_option("--tile-px", options.montage.tile_px, "Montage tile side, pixels")
      ->capture_default_str();

  app.add_option("--patients", sim.patients, "simulate: cohort size")->capture_default_str();
  app.add_option("--beta", sim.oracle.beta, "simulate: oracle noise scale")
      ->capture_default_str();
  app.add_option("--epsilon", sim.oracle.epsilon, "simulate: comparable band")
      ->capture_default_str();
  app.add_flag("--noiseless", sim.oracle.noiseless, "simulate: deterministic sign judge");
  app.add_option("--nodes-min", sim.nodes_min, "simulate: min nodes per patient")
      ->capture_default_str();
  app.add_option("--nodes-max", sim.nodes_max, "simulate: max nodes per patient")
      ->capture_default_str();

  app.add_option("--scores", scores_path, "evaluate: scores csv (default <out>/scores.csv)");
  app.add_option("--labels", labels_path, "evaluate: labels csv (default <dataset>/labels.csv)");
  app.add_option("--split", split_path, "evaluate: split json (default <out>/split.json)");
  app.add_option("--metrics-out", metrics_out, "evaluate: metrics output (default <out>/metrics.json)");

  auto* montage_cmd = app.add_subcommand("montage", "Compile per-patient node montages");
  auto* report_cmd = app.add_subcommand("report", "Stage-one structured reports via the judge");
  auto* rank_cmd = app.add_subcommand("rank", "Stage-two pairwise ranking into net-wins scores");
  auto* ablate_cmd =
      app.add_subcommand("ablate-rule-score", "Rule-based scores straight from the reports");
  auto* split_cmd = app.add_subcommand("split", "Stratified train/test split from labels.csv");
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Calibrate threshold on train, report test metrics");
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Synthetic cohort + oracle judge, end to end");
  auto* runall_cmd = app.add_subcommand("run-all", "montage, report, rank, ablate, split, evaluate");
  for (CLI::App* sub : {montage_cmd, report_cmd, rank_cmd, ablate_cmd, split_cmd, evaluate_cmd,
                        simulate_cmd, runall_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    options.dataset_dir = dataset_dir;
    options.out_dir = out_dir;
    options.prompts_dir = prompts_dir;
    options.scheduler.seed = seed;
    options.split_seed = split_seed_given ? split_seed : seed;
    options.backend.cache_dir = cache_dir.empty() ? options.out_dir / "cache"
                                                  : std::filesystem::path(cache_dir);
    sim.seed = seed;
    if (!weights_file.empty()) options.rule_weights = load_weights_file(weights_file);

    const auto kind = backend_kind_from_name(backend_name);
    if (!kind) throw ConfigError("unknown backend: " + backend_name);
    options.backend.kind = *kind;
    const auto mode = mode_from_name(prompt_mode_name);
    if (!mode) throw ConfigError("unknown prompt mode: " + prompt_mode_name);
    options.prompt_mode = *mode;
    if (objective_name == "f1")
      options.objective = ThresholdObjective::f1;
    else if (objective_name == "youden")
      options.objective = ThresholdObjective::youden;
    else
      throw ConfigError("unknown objective: " + objective_name);

    auto need_dataset = [&] {
      if (options.dataset_dir.empty())
        throw ConfigError("this subcommand needs --dataset");
    };

    if (montage_cmd->parsed()) {
      need_dataset();
      const StageSummary s = cmd_montage(options);
      std::printf("montage: %ld patients -> %s/montages\n", s.patients, out_dir.c_str());
    } else if (report_cmd->parsed()) {
      const StageSummary s = cmd_report(options);
      std::printf("report: %ld patients, %ld judge calls, %ld cache hits\n", s.patients,
                  s.invocations, s.cache_hits);
    } else if (rank_cmd->parsed()) {
      const StageSummary s = cmd_rank(options);
      write_manifest(options, s,
                     {options.out_dir / "comparisons.jsonl", options.out_dir / "scores.csv"});
      std::printf("rank: %ld tasks, %ld invalid, %ld cache hits\n", s.tasks, s.invalids,
                  s.cache_hits);
      if (s.tasks > 0 &&
          double(s.invalids) / double(s.tasks) > options.invalid_limit) {
        std::fprintf(stderr, "error: invalid comparisons %ld/%ld exceed limit %.3f\n",
                     s.invalids, s.tasks, options.invalid_limit);
        return 2;
      }
    } else if (ablate_cmd->parsed()) {
      const StageSummary s = cmd_ablate_rule_score(options);
      std::printf("ablate-rule-score: %ld patients -> rule_scores.csv\n", s.patients);
    } else if (split_cmd->parsed()) {
      need_dataset();
      const Split s = cmd_split(options);
      std::printf("split: %zu train / %zu test -> split.json\n", s.train_ids.size(),
                  s.test_ids.size());
    } else if (evaluate_cmd->parsed()) {
      if (labels_path.empty()) {
        need_dataset();
        labels_path = (options.dataset_dir / "labels.csv").string();
      }
      if (scores_path.empty()) scores_path = (options.out_dir / "scores.csv").string();
      if (split_path.empty()) split_path = (options.out_dir / "split.json").string();
      if (metrics_out.empty()) metrics_out = (options.out_dir / "metrics.json").string();
      const EvaluationOutput e =
          cmd_evaluate(options, scores_path, labels_path, split_path, metrics_out);
      std::printf("evaluate: acc %s prec %s rec %s f1 %s auc %s -> %s\n",
                  e.metrics.accuracy.fixed4().c_str(), e.metrics.precision.fixed4().c_str(),
                  e.metrics.recall.fixed4().c_str(), e.metrics.f1.fixed4().c_str(),
                  Ratio(e.auc.num_x2, e.auc.den_x2).fixed4().c_str(), metrics_out.c_str());
    } else if (simulate_cmd->parsed()) {
      sim.n_opponents = options.scheduler.n_opponents;
      const SimulationResult r = cmd_simulate(options, sim);
      std::printf("simulate: %d patients, %ld tasks, spearman %.4f, auc %.4f\n", sim.patients,
                  r.task_count, r.spearman, r.auc);
    } else if (runall_cmd->parsed()) {
      need_dataset();
      const RunAllResult r = cmd_run_all(options);
      std::printf("run-all: %ld patients, %ld tasks (%ld invalid), metrics.json + "
                  "metrics_rule.json written\n",
                  r.montage.patients, r.rank.tasks, r.rank.invalids);
      if (r.invalid_limit_exceeded) {
        std::fprintf(stderr, "error: invalid comparisons %ld/%ld exceed limit %.3f\n",
                     r.rank.invalids, r.rank.tasks, options.invalid_limit);
        return 2;
      }
    }
  } catch (const JudgeFailure& e) {
    std::fprintf(stderr, "judge failure: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
