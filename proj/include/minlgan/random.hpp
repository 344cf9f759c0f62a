#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace minlgan {

using Rng = std::mt19937_64;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// splitmix64 finalizer; used to derive independent stream seeds from one base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  // Fill row by row so a batch drawn in two halves matches one drawn whole.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline Matrix uniform(Eigen::Index rows, Eigen::Index cols, double low, double high, Rng& rng) {
  std::uniform_real_distribution<double> dist(low, high);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace minlgan
