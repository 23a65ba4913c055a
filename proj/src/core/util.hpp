#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace psl {

/// Shortest form that round-trips a double (17 significant digits).
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_hex(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline double log_sum_exp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

/// FNV-1a 64-bit, incremental.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ull;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  void update(std::uint64_t v) { update(&v, sizeof(v)); }
  void update(std::int64_t v) { update(&v, sizeof(v)); }
  void update(double v) { update(&v, sizeof(v)); }
  void update(int v) { update_i64(v); }
  void update_i64(std::int64_t v) { update(&v, sizeof(v)); }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ull;
};

/// Linear-interpolation quantile of an unsorted sample (copies, sorts).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

/// Flat key/value text record, one "key value" pair per line.
class KeyValueReport {
 public:
  void add(const std::string& key, const std::string& value) {
    rows_.emplace_back(key, value);
  }
  void add(const std::string& key, double value) { add(key, format_g17(value)); }
  void add(const std::string& key, std::int64_t value) {
    add(key, std::to_string(value));
  }
  void add(const std::string& key, int value) {
    add(key, std::to_string(value));
  }
  void add(const std::string& key, std::uint64_t value) {
    add(key, format_hex(value));
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : rows_) {
      out += k;
      out += ' ';
      out += v;
      out += '\n';
    }
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& rows() const {
    return rows_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

}  // namespace psl
