#include "lrmr/prompting.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "lrmr/errors.hpp"
#include "lrmr/io.hpp"
#include "lrmr/sha256.hpp"
#include "prompts_embedded.hpp"

namespace lrmr {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string node_label_list(int node_count) {
  std::string out;
  for (int i = 1; i <= node_count; ++i) {
    if (i > 1) out += ", ";
    out += node_label(i);
  }
  return out;
}

// Balanced {...} starting at `start`; npos when the braces never close.
std::size_t balanced_end(const std::string& s, std::size_t start) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

// Accepts labels as "N3", "n3" or a bare integer.
std::string normalize_node_label(const json& j) {
  if (j.is_number_integer()) {
    const long long v = j.get<long long>();
    if (v < 1) throw ParseError("node index must be positive");
    return "N" + std::to_string(v);
  }
  if (j.is_string()) {
    std::string s = trim(j.get<std::string>());
    if (!s.empty() && (s[0] == 'n')) s[0] = 'N';
    return s;
  }
  throw ParseError("abnormal_nodes entries must be strings or integers");
}

FeatureFinding finding_from_json(const std::string& feature_key, const json& body) {
  const auto id = feature_from_name(feature_key);
  if (!id) throw ValidationError("unknown feature: " + feature_key);
  FeatureFinding f;
  f.feature = *id;
  if (body.contains("summary") && body["summary"].is_string())
    f.summary = body["summary"].get<std::string>();
  if (body.contains("abnormal_nodes")) {
    const json& nodes = body["abnormal_nodes"];
    if (!nodes.is_array()) throw ParseError("abnormal_nodes must be an array");
    for (const auto& n : nodes) f.abnormal_nodes.insert(normalize_node_label(n));
  }
  return f;
}

}  // namespace

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = {
      embedded::kStage1Structured,
      embedded::kStage1Freeform,
      embedded::kStage2,
  };
  return templates;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
  PromptTemplates t;
  t.stage1_structured = read_text_file(dir / "stage1_structured.txt");
  t.stage1_freeform = read_text_file(dir / "stage1_freeform.txt");
  t.stage2 = read_text_file(dir / "stage2.txt");
  return t;
}

std::string PromptTemplates::version() const {
  Sha256 h;
  h.update(stage1_structured);
  h.update(std::string(1, '\0'));
  h.update(stage1_freeform);
  h.update(std::string(1, '\0'));
  h.update(stage2);
  return to_hex(h.finish()).substr(0, 12);
}

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const std::size_t open = tpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tpl, pos, std::string::npos);
      break;
    }
    out.append(tpl, pos, open - pos);
    const std::size_t close = tpl.find("}}", open + 2);
    if (close == std::string::npos) throw ConfigError("unterminated {{placeholder}} in template");
    const std::string key = tpl.substr(open + 2, close - open - 2);
    const auto it = vars.find(key);
    if (it == vars.end()) throw ConfigError("template references unknown placeholder {{" + key + "}}");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

PromptText build_stage1_prompt(int node_count, ReportMode mode,
                               const PromptTemplates& templates) {
  if (node_count < 1) throw ValidationError("node_count must be >= 1");
  const std::string& tpl = mode == ReportMode::structured ? templates.stage1_structured
                                                          : templates.stage1_freeform;
  PromptText prompt;
  prompt.text = render_template(tpl, {{"node_labels", node_label_list(node_count)}});
  prompt.stage = PromptStage::one;
  prompt.mode = mode;
  return prompt;
}

PromptText build_stage2_prompt(const StructuredReport& report_a,
                               const StructuredReport& report_b,
                               const PromptTemplates& templates) {
  if (report_a.mode != report_b.mode)
    throw ValidationError("cannot compare reports of different modes");
  const ValidationResult va = validate_report(report_a, report_a.node_count);
  if (!va.ok()) throw ValidationError("report A invalid: " + va.joined());
  const ValidationResult vb = validate_report(report_b, report_b.node_count);
  if (!vb.ok()) throw ValidationError("report B invalid: " + vb.joined());

  PromptText prompt;
  prompt.text = render_template(templates.stage2,
                                {{"report_a", serialize_report_blinded(report_a)},
                                 {"report_b", serialize_report_blinded(report_b)}});
  prompt.stage = PromptStage::two;
  prompt.mode = report_a.mode;
  return prompt;
}

std::vector<std::string> extract_json_payloads(const std::string& raw, std::size_t max_n) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (out.size() < max_n) {
    const std::size_t open = raw.find('{', pos);
    if (open == std::string::npos) break;
    const std::size_t close = balanced_end(raw, open);
    if (close == std::string::npos) {
      pos = open + 1;
      continue;
    }
    std::string candidate = raw.substr(open, close - open + 1);
    if (json::accept(candidate)) {
      out.push_back(std::move(candidate));
      pos = close + 1;
    } else {
      pos = open + 1;
    }
  }
  return out;
}

std::string extract_json_payload(const std::string& raw) {
  auto payloads = extract_json_payloads(raw, 1);
  if (payloads.empty()) throw ParseError("no JSON object found in judge output");
  return payloads.front();
}

StructuredReport parse_structured_report(const std::string& raw,
                                         const std::string& patient_id, int node_count) {
  // Whole answers that are already JSON (including bare arrays of findings)
  // are taken as-is; otherwise dig the first object out of the prose.
  const std::string trimmed = trim(raw);
  const json j = json::accept(trimmed) ? json::parse(trimmed)
                                       : json::parse(extract_json_payload(raw));

  json findings;
  if (j.is_object() && j.contains("findings"))
    findings = j["findings"];
  else if (j.is_array())
    findings = j;
  else
    throw ParseError("judge output has no findings");

  StructuredReport report;
  report.patient_id = patient_id;
  report.node_count = node_count;
  report.mode = ReportMode::structured;

  if (findings.is_array()) {
    for (const auto& jf : findings) {
      if (!jf.is_object()) throw ParseError("finding entries must be objects");
      if (!jf.contains("feature") || !jf["feature"].is_string())
        throw ParseError("finding entry lacks a feature name");
      report.findings.push_back(finding_from_json(jf["feature"].get<std::string>(), jf));
    }
  } else if (findings.is_object()) {
    // Tolerated variant: a map of feature name -> finding body.
    for (auto it = findings.begin(); it != findings.end(); ++it)
      report.findings.push_back(finding_from_json(it.key(), it.value()));
  } else {
    throw ParseError("findings must be an array or object");
  }

  std::sort(report.findings.begin(), report.findings.end(),
            [](const FeatureFinding& a, const FeatureFinding& b) {
              return static_cast<int>(a.feature) < static_cast<int>(b.feature);
            });

  const ValidationResult check = validate_report(report, node_count);
  if (!check.ok()) throw ValidationError("judge report rejected: " + check.joined());
  return report;
}

StructuredReport parse_freeform_report(const std::string& raw,
                                       const std::string& patient_id, int node_count) {
  StructuredReport report;
  report.patient_id = patient_id;
  report.node_count = node_count;
  report.mode = ReportMode::freeform;
  report.freeform_text = trim(raw);
  if (report.freeform_text.empty()) throw ParseError("empty freeform description");
  return report;
}

std::string choice_name(Choice c) {
  switch (c) {
    case Choice::A:
      return "A";
    case Choice::B:
      return "B";
    default:
      return "Comparable";
  }
}

ComparisonVerdict parse_comparison(const std::string& raw) {
  const json j = json::parse(extract_json_payload(raw));
  if (!j.is_object() || !j.contains("choice"))
    throw ParseError("judge output has no choice field");
  if (!j["choice"].is_string()) throw ParseError("choice must be a string");

  const std::string choice = to_lower(trim(j["choice"].get<std::string>()));
  ComparisonVerdict verdict;
  if (choice == "a")
    verdict.choice = Choice::A;
  else if (choice == "b")
    verdict.choice = Choice::B;
  else if (choice == "comparable" || choice == "tie")
    verdict.choice = Choice::Comparable;
  else
    throw ParseError("unrecognized choice value: " + j["choice"].get<std::string>());

  if (j.contains("analysis") && j["analysis"].is_string())
    verdict.analysis = j["analysis"].get<std::string>();
  return verdict;
}

std::string serialize_comparison(const ComparisonVerdict& verdict) {
  json j;
  j["analysis"] = verdict.analysis;
  j["choice"] = choice_name(verdict.choice);
  return j.dump();
}

}  // namespace lrmr
