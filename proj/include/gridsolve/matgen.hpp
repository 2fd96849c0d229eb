#pragma once

// Test-matrix and right-hand-side generators driven by short textual specs:
//
//   random_dense:n=N[,seed=S][,shift=D]  uniform [0,1) entries, plus D on the diagonal
//   spd:n=N[,seed=S]                     M^T M + n I with M uniform [0,1)
//   poisson2d:n=N | poisson2d:k=K        5-point Laplacian on a K x K grid (N = K^2)
//   identity:n=N, zeros:n=N
//   file:path=P                          Matrix Market or raw binary
//
// Right-hand sides: ones, zeros, random[:seed=S], file:path=P (an n x 1 matrix).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gridsolve/core.hpp"

namespace gridsolve::matgen {

struct MatrixSpec {
  std::string kind;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  double shift = 0;
  std::string path;
};

/// Throws IoError on malformed specs.
MatrixSpec parse_matrix_spec(std::string_view text);

/// `default_seed` applies when the spec carries none.
Matrix<double> generate(const MatrixSpec& spec, std::uint64_t default_seed = 0);

/// Uniform [0,1) fill in column-major order from a 64-bit Mersenne Twister.
Matrix<double> random_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed);

Vector<double> make_rhs(std::string_view spec, std::size_t n, std::uint64_t default_seed = 0);

}  // namespace gridsolve::matgen
