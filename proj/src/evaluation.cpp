#include "lrmr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "lrmr/errors.hpp"
#include "lrmr/rng.hpp"

namespace lrmr {

using nlohmann::json;

Split stratified_split(const std::map<std::string, int>& labels, double train_frac,
                       std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw ConfigError("train_frac must be strictly between 0 and 1");

  std::vector<std::string> classes[2];
  for (const auto& [id, label] : labels) {
    if (label != 0 && label != 1)
      throw ConfigError("labels must be 0 or 1; patient " + id + " has " +
                        std::to_string(label));
    classes[label].push_back(id);  // map iteration: already sorted by id
  }
  if (classes[0].empty() || classes[1].empty())
    throw ConfigError("stratified split needs both classes present");

  const long total = long(labels.size());
  const long train_total = long(std::floor(double(total) * train_frac + 1e-9));
  if (train_total < 1 || train_total >= total)
    throw ConfigError("train_frac leaves an empty train or test set");

  // Class quotas: floor share each, remaining slots by largest fractional
  // remainder (ties favor class 0).
  long quota[2];
  double remainder[2];
  for (int c = 0; c < 2; ++c) {
    const double share = double(classes[c].size()) * train_frac;
    quota[c] = long(std::floor(share + 1e-9));
    remainder[c] = share - double(quota[c]);
  }
  long leftover = train_total - quota[0] - quota[1];
  while (leftover > 0) {
    const int pick = remainder[1] > remainder[0] ? 1 : 0;
    quota[pick]++;
    remainder[pick] = -1.0;
    --leftover;
  }

  Rng rng(seed);
  Split split;
  split.seed = seed;
  split.train_frac = train_frac;
  for (int c = 0; c < 2; ++c) {
    std::vector<std::string> ids = classes[c];
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size(); ++i)
      (long(i) < quota[c] ? split.train_ids : split.test_ids).push_back(ids[i]);
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

std::string split_to_json(const Split& split) {
  json j;
  j["seed"] = split.seed;
  j["train_frac"] = split.train_frac;
  j["train_ids"] = split.train_ids;
  j["test_ids"] = split.test_ids;
  return j.dump();
}

Split split_from_json(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    Split split;
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train_frac = j.at("train_frac").get<double>();
    split.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    split.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return split;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad split file: ") + e.what());
  }
}

ConfusionMatrix confusion_matrix(const std::map<std::string, int>& labels,
                                 const std::map<std::string, int>& predictions) {
  if (labels.size() != predictions.size())
    throw DataError("labels and predictions cover different patients");
  ConfusionMatrix cm;
  for (const auto& [id, label] : labels) {
    const auto it = predictions.find(id);
    if (it == predictions.end()) throw DataError("no prediction for patient " + id);
    const int pred = it->second;
    if (label == 1)
      (pred == 1 ? cm.tp : cm.fn)++;
    else
      (pred == 1 ? cm.fp : cm.tn)++;
  }
  return cm;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const long n = cm.total();
  if (n <= 0) throw ValidationError("confusion matrix is empty");
  Metrics m;
  m.accuracy = Ratio(cm.tp + cm.tn, n);
  m.precision = cm.tp + cm.fp > 0 ? Ratio(cm.tp, cm.tp + cm.fp) : Ratio::zero();
  m.recall = cm.tp + cm.fn > 0 ? Ratio(cm.tp, cm.tp + cm.fn) : Ratio::zero();
  const long f1_den = 2 * cm.tp + cm.fp + cm.fn;
  m.f1 = f1_den > 0 ? Ratio(2 * cm.tp, f1_den) : Ratio::zero();
  return m;
}

AucValue compute_auc_exact(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("scores and labels have different lengths");
  long long n_pos = 0, n_neg = 0;
  for (int label : labels) (label == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw ConfigError("AUC needs both classes present");

  std::vector<std::pair<double, int>> pairs;
  pairs.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pairs.emplace_back(scores[i], labels[i]);
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Sweep equal-score groups: each positive scores 2 per negative strictly
  // below it and 1 per negative tied with it (half-unit ties).
  long long num_x2 = 0;
  long long negs_below = 0;
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i;
    long long pos_here = 0, neg_here = 0;
    while (j < pairs.size() && pairs[j].first == pairs[i].first) {
      (pairs[j].second == 1 ? pos_here : neg_here)++;
      ++j;
    }
    num_x2 += pos_here * (2 * negs_below + neg_here);
    negs_below += neg_here;
    i = j;
  }
  return AucValue{num_x2, 2 * n_pos * n_neg};
}

double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  return compute_auc_exact(scores, labels).value();
}

namespace {

struct CandidateQuality {
  Ratio f1;
  Ratio recall;
  long long youden_num = 0;  // tp*nn - fp*np over common denominator np*nn

  bool better_than(const CandidateQuality& other, ThresholdObjective objective) const {
    if (objective == ThresholdObjective::f1) {
      if (!(f1 == other.f1)) return other.f1 < f1;
    } else {
      if (youden_num != other.youden_num) return youden_num > other.youden_num;
    }
    if (!(recall == other.recall)) return other.recall < recall;
    return false;  // full tie: keep the earlier (smaller) threshold
  }
};

}  // namespace

Threshold calibrate_threshold(const std::map<std::string, double>& scores,
                              const std::map<std::string, int>& labels,
                              const std::vector<std::string>& train_ids,
                              ThresholdObjective objective) {
  if (train_ids.empty()) throw ConfigError("empty train set");

  std::vector<std::pair<double, int>> train;
  train.reserve(train_ids.size());
  long np = 0, nn = 0;
  for (const auto& id : train_ids) {
    const auto s = scores.find(id);
    if (s == scores.end()) throw DataError("no score for train patient " + id);
    const auto l = labels.find(id);
    if (l == labels.end()) throw DataError("no label for train patient " + id);
    train.emplace_back(s->second, l->second);
    (l->second == 1 ? np : nn)++;
  }
  // A single-class train set is degenerate but well-defined: the candidate
  // scan still picks the F1/Youden maximizer (-inf when all positive).

  std::vector<double> distinct;
  for (const auto& [score, label] : train) distinct.push_back(score);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 1; i < distinct.size(); ++i)
    candidates.push_back((distinct[i - 1] + distinct[i]) / 2.0);
  candidates.push_back(std::numeric_limits<double>::infinity());

  auto quality_at = [&](double threshold) {
    long tp = 0, fp = 0;
    for (const auto& [score, label] : train) {
      if (score >= threshold) (label == 1 ? tp : fp)++;
    }
    const long fn = np - tp;
    CandidateQuality q;
    const long f1_den = 2 * tp + fp + fn;
    q.f1 = f1_den > 0 ? Ratio(2 * tp, f1_den) : Ratio::zero();
    q.recall = np > 0 ? Ratio(tp, np) : Ratio::zero();
    q.youden_num = (long long)tp * nn - (long long)fp * np;
    return q;
  };

  Threshold best;
  best.value = candidates.front();
  best.degenerate = distinct.size() == 1;
  CandidateQuality best_quality = quality_at(best.value);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const CandidateQuality q = quality_at(candidates[i]);
    if (q.better_than(best_quality, objective)) {
      best_quality = q;
      best.value = candidates[i];
    }
  }
  best.train_f1 = best_quality.f1;
  return best;
}

std::map<std::string, int> classify_with_threshold(const std::map<std::string, double>& scores,
                                                   double threshold) {
  std::map<std::string, int> predictions;
  for (const auto& [id, score] : scores) predictions[id] = score >= threshold ? 1 : 0;
  return predictions;
}

namespace {

std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mid = (double(i + 1) + double(j)) / 2.0;  // 1-based mid-rank
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
    i = j;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("rank vectors have different lengths");
  const std::size_t n = a.size();
  if (n < 2) throw ConfigError("Spearman correlation needs at least 2 points");

  const std::vector<double> ra = midranks(a);
  const std::vector<double> rb = midranks(b);
  double mean_a = 0, mean_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= double(n);
  mean_b /= double(n);
  double cov = 0, var_a = 0, var_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace lrmr
