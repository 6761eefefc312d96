#include "lrmr/report.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "lrmr/errors.hpp"

namespace lrmr {

using nlohmann::json;

namespace {

const std::array<std::string, kFeatureCount> kFeatureNames = {
    "shape",
    "border_contour",
    "border_clarity",
    "signal_heterogeneity",
    "fatty_hilum_absence",
    "necrosis",
    "size_impression",
    "relative_signal_intensity",
    "perinodal_fat_stranding",
    "node_clustering",
};

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Sort labels by node index so serialization does not depend on set order
// quirks for ill-formed labels.
std::vector<std::string> ordered_labels(const std::set<std::string>& labels) {
  std::vector<std::string> v(labels.begin(), labels.end());
  std::sort(v.begin(), v.end(), [](const std::string& a, const std::string& b) {
    const auto ia = parse_node_label(a), ib = parse_node_label(b);
    if (ia && ib) return *ia < *ib;
    if (ia != ib) return ia.has_value();
    return a < b;
  });
  return v;
}

json report_to_json(const StructuredReport& report, bool include_patient_id) {
  json j;
  if (include_patient_id) j["patient_id"] = report.patient_id;
  j["node_count"] = report.node_count;
  j["mode"] = mode_name(report.mode);
  json findings = json::array();
  for (const auto& f : report.findings) {
    json jf;
    jf["feature"] = feature_name(f.feature);
    jf["summary"] = f.summary;
    jf["abnormal_nodes"] = ordered_labels(f.abnormal_nodes);
    findings.push_back(std::move(jf));
  }
  j["findings"] = std::move(findings);
  if (report.mode == ReportMode::freeform) j["freeform_text"] = report.freeform_text;
  return j;
}

}  // namespace

const std::array<FeatureId, kFeatureCount>& all_features() {
  static const std::array<FeatureId, kFeatureCount> ids = [] {
    std::array<FeatureId, kFeatureCount> a{};
    for (int i = 0; i < kFeatureCount; ++i) a[i] = static_cast<FeatureId>(i);
    return a;
  }();
  return ids;
}

const std::string& feature_name(FeatureId id) {
  return kFeatureNames[static_cast<int>(id)];
}

std::optional<FeatureId> feature_from_name(const std::string& name) {
  const std::string lowered = to_lower(name);
  for (int i = 0; i < kFeatureCount; ++i)
    if (kFeatureNames[i] == lowered) return static_cast<FeatureId>(i);
  return std::nullopt;
}

std::string node_label(int index) {
  if (index < 1) throw ValidationError("node index must be >= 1, got " + std::to_string(index));
  return "N" + std::to_string(index);
}

std::optional<int> parse_node_label(const std::string& label) {
  if (label.size() < 2 || label[0] != 'N') return std::nullopt;
  if (label[1] == '0') return std::nullopt;  // no padding
  long value = 0;
  for (std::size_t i = 1; i < label.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(label[i]))) return std::nullopt;
    value = value * 10 + (label[i] - '0');
    if (value > 1000000000L) return std::nullopt;
  }
  return static_cast<int>(value);
}

std::string mode_name(ReportMode mode) {
  return mode == ReportMode::structured ? "structured" : "freeform";
}

std::optional<ReportMode> mode_from_name(const std::string& name) {
  const std::string lowered = to_lower(name);
  if (lowered == "structured") return ReportMode::structured;
  if (lowered == "freeform") return ReportMode::freeform;
  return std::nullopt;
}

std::string ValidationResult::joined() const {
  std::string s;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) s += "; ";
    s += violations[i];
  }
  return s;
}

ValidationResult validate_report(const StructuredReport& report, int node_count) {
  ValidationResult result;
  auto flag = [&](const std::string& v) { result.violations.push_back(v); };

  if (report.patient_id.empty()) flag("empty patient_id");
  if (node_count < 1) flag("node_count must be >= 1");
  if (report.node_count != node_count)
    flag("report node_count " + std::to_string(report.node_count) +
         " does not match expected " + std::to_string(node_count));

  if (report.mode == ReportMode::freeform) {
    if (!report.findings.empty()) flag("freeform report must have no findings");
    if (report.freeform_text.empty()) flag("freeform report must have freeform_text");
    return result;
  }

  if (!report.freeform_text.empty()) flag("structured report must not carry freeform_text");

  std::array<int, kFeatureCount> seen{};
  for (const auto& f : report.findings) seen[static_cast<int>(f.feature)]++;
  for (int i = 0; i < kFeatureCount; ++i) {
    if (seen[i] == 0) flag("missing feature: " + kFeatureNames[i]);
    if (seen[i] > 1) flag("duplicate feature: " + kFeatureNames[i]);
  }
  if (report.findings.size() == kFeatureCount) {
    bool ordered = true;
    for (int i = 0; i < kFeatureCount; ++i)
      if (report.findings[i].feature != static_cast<FeatureId>(i)) ordered = false;
    if (!ordered) flag("findings not in canonical feature order");
  }

  for (const auto& f : report.findings) {
    for (const auto& label : f.abnormal_nodes) {
      const auto idx = parse_node_label(label);
      if (!idx || *idx < 1 || *idx > node_count)
        flag("unknown node label " + label + " cited by " + feature_name(f.feature));
    }
  }
  return result;
}

std::string serialize_report(const StructuredReport& report) {
  return report_to_json(report, true).dump();
}

std::string serialize_report_blinded(const StructuredReport& report) {
  return report_to_json(report, false).dump();
}

StructuredReport load_report(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("report file is not valid JSON: ") + e.what());
  }
  StructuredReport report;
  try {
    report.patient_id = j.at("patient_id").get<std::string>();
    report.node_count = j.at("node_count").get<int>();
    const auto mode = mode_from_name(j.at("mode").get<std::string>());
    if (!mode) throw InputError("unknown report mode");
    report.mode = *mode;
    for (const auto& jf : j.at("findings")) {
      FeatureFinding f;
      const auto id = feature_from_name(jf.at("feature").get<std::string>());
      if (!id) throw InputError("unknown feature name in report file");
      f.feature = *id;
      f.summary = jf.value("summary", "");
      for (const auto& n : jf.at("abnormal_nodes"))
        f.abnormal_nodes.insert(n.get<std::string>());
      report.findings.push_back(std::move(f));
    }
    if (j.contains("freeform_text")) report.freeform_text = j.at("freeform_text").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError(std::string("report file schema error: ") + e.what());
  }
  const ValidationResult check = validate_report(report, report.node_count);
  if (!check.ok()) throw ValidationError("invalid report file: " + check.joined());
  return report;
}

}  // namespace lrmr
