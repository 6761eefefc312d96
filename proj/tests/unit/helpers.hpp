#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "lrmr/png.hpp"
#include "lrmr/report.hpp"
#include "lrmr/rng.hpp"

namespace lrmr::testing {

// Structured report with all ten findings; only the listed features cite
// abnormal nodes.
inline StructuredReport make_report(
    const std::string& patient_id, int node_count,
    const std::map<FeatureId, std::set<std::string>>& abnormal = {}) {
  StructuredReport report;
  report.patient_id = patient_id;
  report.node_count = node_count;
  report.mode = ReportMode::structured;
  for (FeatureId f : all_features()) {
    FeatureFinding finding;
    finding.feature = f;
    finding.summary = "test summary";
    const auto it = abnormal.find(f);
    if (it != abnormal.end()) finding.abnormal_nodes = it->second;
    report.findings.push_back(std::move(finding));
  }
  return report;
}

inline GrayImage noisy_image(int w, int h, std::uint64_t seed) {
  GrayImage img(w, h);
  Rng rng(seed);
  for (auto& px : img.pixels) px = std::uint8_t(rng.below(256));
  return img;
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lrmr-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace lrmr::testing
