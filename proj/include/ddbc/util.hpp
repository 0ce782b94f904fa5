#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace ddbc {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Raised when an input violates a documented contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a configurable resource budget is exhausted mid-computation.
// Carries the pipeline stage so callers can report where the blow-up happened.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline constexpr u64 bit(int i) noexcept { return u64{1} << i; }
inline int popcount(u64 m) noexcept { return std::popcount(m); }

// Mask with the n lowest bits set; n in [0, 64].
inline constexpr u64 low_bits(int n) noexcept {
  return n >= 64 ? ~u64{0} : (u64{1} << n) - 1;
}

inline std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(char('0' + int(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

// splitmix64 finalizer; good avalanche for hash-table keys.
inline u64 hash_mix(u64 x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline u64 hash_combine(u64 a, u64 b) noexcept {
  return hash_mix(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// Deterministic mapping from a 64-bit draw to [0, 1); identical on every
// platform, unlike std::uniform_real_distribution.
inline double canonical_unit(u64 r) noexcept {
  return double(r >> 11) * 0x1.0p-53;
}

}  // namespace ddbc
