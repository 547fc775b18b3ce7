// Shared basics: error taxonomy, reproducible RNG streams, stable hashing,
// and the overflow-safe scalar math everything else leans on.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace irgan {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (config=1, data=2, runtime=3).
// ---------------------------------------------------------------------------

// Caller broke a documented precondition.
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text; carries a 1-based line number when known.
struct ParseError : DataError {
  ParseError(const std::string& msg, long line)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  long line_number = 0;
};

struct LookupError : DataError {
  explicit LookupError(const std::string& msg) : DataError(msg) {}
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

// ---------------------------------------------------------------------------
// Hashing and seed derivation.
//
// Stream rule: the stream for query id Q is seeded with
//   splitmix64(run_seed ^ fnv1a64(Q) ^ role_tag ^ golden * step)
// so per-query streams are independent of iteration order and safe to consume
// in parallel. The base rule (seed xor stable hash of the query id) is part
// of the replayability contract; splitmix64 whitens correlated inputs.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class StreamRole : std::uint64_t {
  GeneratorSampling = 0x67656e73616d706cull,  // "gensampl"
  NegativeSampling = 0x6e656773616d706cull,   // "negsampl"
  PositiveChoice = 0x706f7363686f6963ull,     // "poschoic"
  EpochShuffle = 0x73687566666c6530ull,       // "shuffle0"
  Init = 0x696e697430303030ull,               // "init0000"
  Split = 0x73706c6974303030ull,              // "split000"
  LabProbe = 0x6c61627072626530ull,           // "labprbe0"
};

inline std::uint64_t derive_stream_seed(std::uint64_t run_seed, std::string_view query_id,
                                        StreamRole role, std::uint64_t step = 0) {
  std::uint64_t s = run_seed ^ fnv1a64(query_id) ^ static_cast<std::uint64_t>(role);
  return splitmix64(s ^ (0x9e3779b97f4a7c15ull * (step + 1)));
}

// ---------------------------------------------------------------------------
// Rng: mt19937_64 with hand-mapped distributions.
//
// std:: distributions are not bit-identical across standard libraries, so the
// uniform / normal mappings are written out here. Algorithm id recorded in
// run logs: "mt19937_64+canonical-u53".
// ---------------------------------------------------------------------------

inline constexpr const char* kRngAlgorithmId = "mt19937_64+canonical-u53";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1): 53 random bits scaled.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe for log(u) and log(-log(u)).
  double uniform_open01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller without a cached spare so the draw count stays predictable.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform_open01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n). Lemire multiply-shift; bias is O(n/2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Scalar math, overflow-safe for |x| up to ~1e308.
// ---------------------------------------------------------------------------

// sigma(x) = 1 / (1 + exp(-x)), evaluated on the non-overflowing branch.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) = max(x, 0) + log1p(exp(-|x|)).
inline double softplus(double x) {
  double m = x > 0.0 ? x : 0.0;
  return m + std::log1p(std::exp(-std::fabs(x)));
}

// log(sigma(x)) = -softplus(-x); log(1 - sigma(x)) = -softplus(x).
inline double log_sigmoid(double x) { return -softplus(-x); }

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation (n in the denominator, so n=1 gives 0).
inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace irgan
