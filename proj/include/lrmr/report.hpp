#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lrmr/png.hpp"

namespace lrmr {

// The ten checklist features, in canonical order. Order is load-bearing:
// prompts number the questions with it and structured reports must list
// findings in it.
enum class FeatureId {
  shape = 0,
  border_contour,
  border_clarity,
  signal_heterogeneity,
  fatty_hilum_absence,
  necrosis,
  size_impression,
  relative_signal_intensity,
  perinodal_fat_stranding,
  node_clustering,
};

inline constexpr int kFeatureCount = 10;

const std::array<FeatureId, kFeatureCount>& all_features();
const std::string& feature_name(FeatureId id);
// Case-insensitive lookup; nullopt for unknown names.
std::optional<FeatureId> feature_from_name(const std::string& name);

// "N{index}", 1-based, no padding.
std::string node_label(int index);
// Strict inverse of node_label; nullopt unless the string is exactly N<n>.
std::optional<int> parse_node_label(const std::string& label);

struct NodePatch {
  int index = 0;  // 1-based
  GrayImage image;

  std::string label() const { return node_label(index); }
};

struct PatientRecord {
  std::string patient_id;
  std::optional<int> label;  // 1 = metastatic, 0 = non-metastatic
  std::vector<NodePatch> patches;
};

struct FeatureFinding {
  FeatureId feature = FeatureId::shape;
  std::string summary;
  std::set<std::string> abnormal_nodes;

  bool operator==(const FeatureFinding&) const = default;
};

enum class ReportMode { structured, freeform };

std::string mode_name(ReportMode mode);
std::optional<ReportMode> mode_from_name(const std::string& name);

struct StructuredReport {
  std::string patient_id;
  int node_count = 0;
  ReportMode mode = ReportMode::structured;
  std::vector<FeatureFinding> findings;  // empty in freeform mode
  std::string freeform_text;             // non-empty iff freeform mode

  bool operator==(const StructuredReport&) const = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string joined() const;
};

// Checks every schema invariant; violations are returned, never thrown.
ValidationResult validate_report(const StructuredReport& report, int node_count);

// Canonical serialization: sorted keys, no insignificant whitespace,
// abnormal_nodes ordered by node index. Identical reports give identical
// bytes, which cache digests rely on.
std::string serialize_report(const StructuredReport& report);

// Same, minus patient_id: the form embedded into comparison prompts.
std::string serialize_report_blinded(const StructuredReport& report);

// Strict load of the on-disk report format; throws InputError/ValidationError.
StructuredReport load_report(const std::string& json_text);

}  // namespace lrmr
