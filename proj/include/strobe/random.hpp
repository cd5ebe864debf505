#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "strobe/quantum_core.hpp"

namespace strobe {

/// SplitMix64. Used for counter-derived streams where a generator is created
/// per (seed, stream, counter) triple and only a handful of draws are taken.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Stream identifiers keep the noise and control generators of one trajectory apart.
enum class Stream : std::uint64_t { Noise = 1, Control = 2, Sampling = 3, Oracle = 4 };

/// Deterministic 64-bit seed for (seed, stream, counter).
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t counter = 0) {
  SplitMix64 mix(seed ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
  std::uint64_t h = mix();
  SplitMix64 mix2(h ^ (counter * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
  return mix2();
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, stream, counter));
}

/// Matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1).
template <class Urbg>
Matrix complex_gaussian(int rows, int cols, Urbg& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      const double re = n(rng);
      const double im = n(rng);
      m(i, j) = Complex(re, im);
    }
  }
  return m;
}

template <class Urbg>
Vector random_pure_state(int dim, Urbg& rng) {
  Vector v = complex_gaussian(dim, 1, rng).col(0);
  return v / v.norm();
}

/// Induced-measure random state G G^+ / tr with G of size dim x rank.
/// rank = dim gives the Hilbert-Schmidt ensemble; rank = 1 gives pure states.
template <class Urbg>
DensityMatrix random_density_matrix(int dim, Urbg& rng, int rank = -1) {
  if (rank <= 0) rank = dim;
  const Matrix g = complex_gaussian(dim, rank, rng);
  Matrix r = g * g.adjoint();
  r /= r.trace().real();
  return DensityMatrix(hermitize(r));
}

/// Random traceless Hermitian operator with O(1) spectrum (GUE, trace removed).
template <class Urbg>
Observable random_observable(int dim, Urbg& rng) {
  const Matrix g = complex_gaussian(dim, dim, rng);
  Matrix h = hermitize(g);
  h -= (h.trace() / static_cast<double>(dim)) * Matrix::Identity(dim, dim);
  return Observable(hermitize(h));
}

}  // namespace strobe
