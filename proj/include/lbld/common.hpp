#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lbld {

// Single RNG engine used everywhere; every operation that draws randomness
// takes an explicit handle so callers own their streams.
using Rng = std::mt19937_64;

constexpr double kPi = 3.14159265358979323846;

// SplitMix64 step, used to derive independent substreams from (seed, index)
// without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Thrown when a geodesic average is requested at or beyond the distance where
// the minimizing geodesic stops being unique.
struct AmbiguousGeodesicError : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown when rejection sampling sees no acceptance over a full trial window.
struct PathologicalEpsilonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by the shadow renderer when the sun/tip line is parallel to the
// ground plane (unreachable for valid configurations, guarded anyway).
struct DegenerateGeometryError : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown when the isometry term would be evaluated on (numerically) collapsed
// latent codes; the term diverges there, so we surface a diagnostic instead.
struct EncoderCollapseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when the singular-value penalty is evaluated on a rank-deficient
// matrix (the inverse term diverges).
struct SingularGammaError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace lbld
