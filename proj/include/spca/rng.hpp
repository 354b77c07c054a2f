#ifndef SPCA_RNG_HPP
#define SPCA_RNG_HPP

#include <cmath>
#include <cstdint>

namespace spca {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t key, std::uint64_t index) {
  return mix64(mix64(key + kGolden * (index + 0x632BE59BD9B4E019ull)) + kGolden);
}

}  // namespace detail

// Counter-based deterministic random stream. A stream is identified by a
// 64-bit key derived from (seed, path of split indices); draws are pure
// functions of (key, counter), so identical (seed, path) reproduce the same
// sequence on every run. split(i) derives a decorrelated child stream
// without consuming state; derive_child() consumes one counter tick and is
// the way entrywise kernels obtain per-call substreams.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed)
      : key_(detail::mix64(seed + detail::kGolden)) {}

  RngStream split(std::uint64_t index) const {
    return RngStream(detail::combine(key_, index), raw_tag{});
  }

  RngStream derive_child() { return split(next_u64()); }

  std::uint64_t next_u64() { return detail::mix64(key_ + detail::kGolden * ++counter_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, bound); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t u;
    do {
      u = next_u64();
    } while (u >= limit);
    return u % bound;
  }

  // Standard normal via the Marsaglia polar method (sqrt/log only, so the
  // sequence is stable across libm implementations in practice).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  std::uint64_t key() const { return key_; }

 private:
  struct raw_tag {};
  RngStream(std::uint64_t key, raw_tag) : key_(key) {}

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double gaussian(RngStream& rng) { return rng.gaussian(); }

}  // namespace spca

#endif  // SPCA_RNG_HPP
