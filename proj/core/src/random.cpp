#include "concpd/random.hpp"

namespace concpd {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix Rng::uniform_matrix(Index rows, Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  // Column-major fill keeps draws in storage order.
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = uniform(lo, hi);
  }
  return m;
}

Vector Rng::uniform_vector(Index size, double lo, double hi) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = uniform(lo, hi);
  return v;
}

}  // namespace concpd
