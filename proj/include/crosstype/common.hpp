#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace crosstype {

enum class Dialect { Alpha, Beta };

inline const char* dialect_name(Dialect d) {
  return d == Dialect::Alpha ? "alpha" : "beta";
}

inline Dialect dialect_from_name(const std::string& s) {
  if (s == "alpha") return Dialect::Alpha;
  if (s == "beta") return Dialect::Beta;
  throw std::invalid_argument("unknown dialect: " + s);
}

// The closed meta-type vocabulary shared by both dialects.
enum class MetaType : int { Boolean = 0, Number = 1, String = 2, List = 3 };

inline constexpr int kNumMetaTypes = 4;

inline const char* meta_type_name(MetaType t) {
  switch (t) {
    case MetaType::Boolean: return "Boolean";
    case MetaType::Number: return "number";
    case MetaType::String: return "string";
    case MetaType::List: return "list";
  }
  return "?";
}

inline MetaType meta_type_from_name(const std::string& s) {
  if (s == "Boolean") return MetaType::Boolean;
  if (s == "number") return MetaType::Number;
  if (s == "string") return MetaType::String;
  if (s == "list") return MetaType::List;
  throw std::invalid_argument("unknown meta-type: " + s);
}

// Sentinel for unreachable distances. Reserved: no finite distance may
// equal it.
inline constexpr int32_t kInfDistance = std::numeric_limits<int32_t>::max();

// Error hierarchy. The CLI maps these onto exit codes.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic RNG utilities. std::uniform_int_distribution is
// implementation-defined, so bounded draws go through these helpers and
// every logged number is reproducible from the seed alone.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    state_[0] = splitmix64(s);
    state_[1] = splitmix64(s);
  }

  uint64_t next() {
    // xoroshiro128++
    uint64_t s0 = state_[0];
    uint64_t s1 = state_[1];
    uint64_t result = rotl(s0 + s1, 17) + s0;
    s1 ^= s0;
    state_[0] = rotl(s0, 49) ^ s1 ^ (s1 << 21);
    state_[1] = rotl(s1, 28);
    return result;
  }

  // Uniform in [0, n).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  // Uniform in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double real() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

  bool chance(double p) { return real() < p; }

  // Weighted index draw; weights need not be normalized.
  size_t weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = real() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0.0) return i;
    }
    return weights.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[2];
};

// Derives an independent stream for worker/program index i.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
  uint64_t s = base ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

}  // namespace crosstype
