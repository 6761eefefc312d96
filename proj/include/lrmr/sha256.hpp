#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lrmr {

// Incremental SHA-256. Used for cache keys, image digests and per-task seed
// derivation; one primitive keeps every digest in the artifact comparable.
class Sha256 {
 public:
  Sha256();

  void update(const void* data, std::size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  void update(const std::vector<std::uint8_t>& v) { update(v.data(), v.size()); }

  std::array<std::uint8_t, 32> finish();

 private:
  void process_block(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_;
  std::array<std::uint8_t, 64> buffer_;
  std::size_t buffer_len_ = 0;
  std::uint64_t total_len_ = 0;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_hex(const std::vector<std::uint8_t>& v);

std::string to_hex(const std::array<std::uint8_t, 32>& digest);

// First 8 digest bytes as a little-endian u64; seeds derived sub-streams.
std::uint64_t sha256_seed(const std::string& s);

}  // namespace lrmr
