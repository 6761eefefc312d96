#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "lrmr/errors.hpp"

namespace lrmr {

// Exact non-negative fraction. Metric values are ratios of small counts, so
// they are kept exact and only rendered to decimals at the output boundary.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Ratio() = default;
  Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den <= 0 || num < 0) throw ValidationError("Ratio requires num >= 0, den > 0");
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  static Ratio zero() { return Ratio{}; }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  bool operator==(const Ratio& o) const { return num == o.num && den == o.den; }
  bool operator<(const Ratio& o) const {
    return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den;
  }
  bool operator>(const Ratio& o) const { return o < *this; }

  // Fixed decimals, rounded half-up. fixed4() matches table formatting.
  std::string fixed(int places) const {
    std::int64_t scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    const __int128 scaled = (static_cast<__int128>(num) * scale * 2 + den) / (2 * static_cast<__int128>(den));
    const std::int64_t whole = static_cast<std::int64_t>(scaled / scale);
    std::int64_t frac = static_cast<std::int64_t>(scaled % scale);
    std::string s = std::to_string(whole);
    if (places > 0) {
      std::string f = std::to_string(frac);
      s += "." + std::string(places - f.size(), '0') + f;
    }
    return s;
  }
  std::string fixed4() const { return fixed(4); }
};

}  // namespace lrmr
