#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrmr/rational.hpp"

namespace lrmr {

struct Split {
  std::vector<std::string> train_ids;  // sorted ascending
  std::vector<std::string> test_ids;   // sorted ascending
  std::uint64_t seed = 0;
  double train_frac = 0.7;
};

// Per-class seeded shuffle; class quotas by largest-remainder allocation of
// floor(n * train_frac) total slots, so 117 patients with 39 positives at
// 0.7 give exactly 81/36 with 27/12 positives.
Split stratified_split(const std::map<std::string, int>& labels, double train_frac,
                       std::uint64_t seed);

std::string split_to_json(const Split& split);
Split split_from_json(const std::string& json_text);

struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

// Labels and predictions must cover the same ids.
ConfusionMatrix confusion_matrix(const std::map<std::string, int>& labels,
                                 const std::map<std::string, int>& predictions);

struct Metrics {
  Ratio accuracy;
  Ratio precision;
  Ratio recall;
  Ratio f1;
};

// accuracy, precision, recall, f1 from a confusion matrix; zero denominators
// yield zero. AUC is computed separately from scores.
Metrics compute_metrics(const ConfusionMatrix& cm);

struct AucValue {
  // Mann-Whitney count in half units: 2*(pos beats neg) + (pos ties neg),
  // over denominator 2 * n_pos * n_neg. Exact, so oracle comparisons are too.
  long long num_x2 = 0;
  long long den_x2 = 0;

  double value() const { return double(num_x2) / double(den_x2); }
};

AucValue compute_auc_exact(const std::vector<double>& scores, const std::vector<int>& labels);
double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels);

enum class ThresholdObjective { f1, youden };

struct Threshold {
  double value = 0.0;          // can be +-infinity
  Ratio train_f1;              // F1 achieved on train at this threshold
  bool degenerate = false;     // all train scores equal
};

// Candidates: -inf, midpoints between consecutive distinct train scores,
// +inf. Prediction rule is score >= threshold. Maximizes the objective on
// the train ids; ties broken by higher recall, then smaller threshold.
Threshold calibrate_threshold(const std::map<std::string, double>& scores,
                              const std::map<std::string, int>& labels,
                              const std::vector<std::string>& train_ids,
                              ThresholdObjective objective = ThresholdObjective::f1);

std::map<std::string, int> classify_with_threshold(const std::map<std::string, double>& scores,
                                                   double threshold);

// Mid-rank Spearman correlation; 0 when either side has no variance.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace lrmr
