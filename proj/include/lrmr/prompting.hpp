#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lrmr/report.hpp"

namespace lrmr {

enum class PromptStage { one, two };

struct PromptText {
  std::string text;
  PromptStage stage = PromptStage::one;
  ReportMode mode = ReportMode::structured;  // stage one only
};

// Template set with {{placeholder}} substitution. The repo's prompts/ files
// are the source of truth; they are embedded at build time and can be
// overridden from a directory at runtime. version() is recorded in every
// run manifest so output can be traced to the exact wording used.
struct PromptTemplates {
  std::string stage1_structured;
  std::string stage1_freeform;
  std::string stage2;

  static const PromptTemplates& builtin();
  static PromptTemplates load_dir(const std::filesystem::path& dir);

  std::string version() const;  // short digest of all three templates
};

// Replaces every {{key}}; throws ConfigError on unknown or unresolved keys.
std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& vars);

PromptText build_stage1_prompt(int node_count, ReportMode mode,
                               const PromptTemplates& templates = PromptTemplates::builtin());

// Embeds both reports blinded (no patient identifiers). Reports must be
// valid and share a mode.
PromptText build_stage2_prompt(const StructuredReport& report_a,
                               const StructuredReport& report_b,
                               const PromptTemplates& templates = PromptTemplates::builtin());

// First balanced JSON object in raw, after ignoring code fences and prose.
// Throws ParseError when none parses.
std::string extract_json_payload(const std::string& raw);

// Successive balanced JSON objects, at most max_n. Empty when none.
std::vector<std::string> extract_json_payloads(const std::string& raw, std::size_t max_n);

// Tolerant decode of a stage-one structured answer: feature names matched
// case-insensitively, unknown keys ignored, findings reordered canonically.
// ParseError on malformed JSON; ValidationError on schema violations.
StructuredReport parse_structured_report(const std::string& raw,
                                         const std::string& patient_id, int node_count);

// Freeform answers are taken verbatim (trimmed); ParseError when empty.
StructuredReport parse_freeform_report(const std::string& raw,
                                       const std::string& patient_id, int node_count);

enum class Choice { A, B, Comparable };

std::string choice_name(Choice c);

struct ComparisonVerdict {
  Choice choice = Choice::Comparable;
  std::string analysis;

  bool operator==(const ComparisonVerdict&) const = default;
};

// Decodes {"analysis", "choice"}; choice matched case-insensitively, "tie"
// accepted as Comparable, analysis defaults to empty.
ComparisonVerdict parse_comparison(const std::string& raw);

std::string serialize_comparison(const ComparisonVerdict& verdict);

}  // namespace lrmr
