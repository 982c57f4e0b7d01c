#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bmcc {

/**
 * Counter-based deterministic random stream.
 *
 * The i-th raw draw is splitmix64(key + i * 0x9E3779B97F4A7C15), where the key
 * is derived from (seed, stream id). Only integer arithmetic is involved, so
 * raw draws are bit-identical on every platform. Normals use Box-Muller on
 * top of the raw draws instead of std::normal_distribution, whose algorithm
 * is implementation-defined.
 *
 * Child streams (seed, index) are independent of each other and of the
 * order in which they are consumed; Monte-Carlo replications use one child
 * per replication.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), key_(derive_key(seed, stream)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t position() const { return counter_; }

  RngStream child(std::uint64_t index) const {
    return RngStream(mix(key_ ^ mix(index + 0x632BE59BD9B4E019ULL)), 0);
  }

  std::uint64_t next_u64() {
    return mix(key_ + (counter_++) * kGolden);
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(uniform()); }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed + kGolden) ^ (stream * 0xD1B54A32D192ED03ULL));
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bmcc
