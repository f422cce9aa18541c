#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tans {

/* Deterministic random number generation.
 *
 * Every stochastic routine in the toolkit draws from this generator so that
 * a (seed, algorithm) pair pins the full output stream:
 *
 *   - engine: std::mt19937_64, whose output sequence is fully specified by
 *     the standard, so streams are stable across platforms and compilers;
 *   - uniforms: the top 53 bits of an engine draw, mapped to [0,1) or,
 *     with a half-ulp offset, to (0,1);
 *   - Gaussians: Box-Muller on two (0,1) uniforms; the second variate of
 *     each pair is cached and returned by the next call.
 *
 * The identifier below is echoed into run manifests so archived results
 * carry the generator they were produced with.
 */
inline constexpr const char* kRngId = "mt19937_64+box-muller";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); the offset keeps log() in the Gaussian transform finite.
  double uniform_open() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal draw.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// splitmix64 finalizer; decorrelates derived stream seeds (per point, per
// seed index) from a single base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tans
