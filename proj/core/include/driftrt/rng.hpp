#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace driftrt {

/// Named stream ids keeping independent consumers of the same user seed apart.
/// Simulator and oracle draws never share a stream (distinct namespaces), and
/// per-subject substreams make results independent of iteration order.
namespace stream {
constexpr std::uint64_t kSimulatorSubject = 1;
constexpr std::uint64_t kCovariateDesign = 2;
constexpr std::uint64_t kOracleMc = 3;
constexpr std::uint64_t kOracleConditional = 4;
constexpr std::uint64_t kRestartJitter = 5;
constexpr std::uint64_t kSelfCheck = 6;
}  // namespace stream

/// Reproducible random stream: a std::mt19937_64 engine (bit-exact across
/// platforms by the standard) seeded through SplitMix64 avalanching, with
/// explicit uniform and Box-Muller normal transforms so the produced doubles
/// do not depend on implementation-defined distribution adapters.
///
/// Substreams are derived by hashing (seed, stream, index); engines for
/// distinct (stream, index) pairs are statistically independent, so changing
/// the number of subjects never perturbs another subject's draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(mix(seed) + 0x632be59bd9b4e019ULL)) {}

  /// Engine for substream `index` of namespace `stream` under `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t index) {
    return Rng(mix(mix(seed) ^ mix(stream_id + 0x9e3779b97f4a7c15ULL) ^
                   mix(index + 0x517cc1b727220a95ULL)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw strictly inside (0, 1): 53-bit mantissa, offset by half an ulp.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via the Box-Muller transform; the second variate of each
  /// pair is cached, so draws come in deterministic order.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace driftrt
