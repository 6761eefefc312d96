#include "lrmr/io.hpp"

#include <fstream>
#include <sstream>

#include "lrmr/errors.hpp"

namespace lrmr {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

namespace {

void write_and_rename(const fs::path& path, const void* data, std::size_t len) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open file for writing: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out.good()) throw InputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw InputError("rename failed for " + path.string() + ": " + ec.message());
}

}  // namespace

void atomic_write_file(const fs::path& path, const std::string& content) {
  write_and_rename(path, content.data(), content.size());
}

void atomic_write_file(const fs::path& path, const std::vector<std::uint8_t>& content) {
  write_and_rename(path, content.data(), content.size());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  line += '\n';
  return line;
}

}  // namespace lrmr
