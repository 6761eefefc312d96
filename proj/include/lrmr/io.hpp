#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lrmr {

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

// Write-temp-then-rename; readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);
void atomic_write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& content);

void ensure_directory(const std::filesystem::path& dir);

// Minimal CSV: no quoting, fields must not contain ',' or newlines. Matches
// the comma-free identifiers and integer counts this artifact emits.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);
std::string csv_line(const std::vector<std::string>& fields);

}  // namespace lrmr
