#include "gridsolve/matgen.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <random>

#include "gridsolve/io.hpp"
#include "gridsolve/kernels.hpp"

namespace gridsolve::matgen {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::IoError, what); }

struct Parsed {
  std::string kind;
  std::map<std::string, std::string, std::less<>> params;
};

Parsed split_spec(std::string_view text) {
  Parsed p;
  const auto colon = text.find(':');
  p.kind = std::string(text.substr(0, colon));
  if (p.kind.empty()) fail("empty spec");
  if (colon == std::string_view::npos) return p;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) fail("expected key=value in '" + std::string(text) + "'");
    p.params.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return p;
}

template <class U>
U to_number(const std::string& s, const char* key) {
  U v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) fail(std::string("bad value for ") + key + ": '" + s + "'");
  return v;
}

double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace

MatrixSpec parse_matrix_spec(std::string_view text) {
  const Parsed p = split_spec(text);
  MatrixSpec spec;
  spec.kind = p.kind;
  for (const auto& [key, value] : p.params) {
    if (key == "n") spec.n = to_number<std::size_t>(value, "n");
    else if (key == "k") {
      const auto k = to_number<std::size_t>(value, "k");
      spec.n = k * k;
    } else if (key == "seed") spec.seed = to_number<std::uint64_t>(value, "seed");
    else if (key == "shift") spec.shift = to_number<double>(value, "shift");
    else if (key == "path") spec.path = value;
    else fail("unknown matrix spec key '" + key + "'");
  }
  if (spec.kind == "file") {
    if (spec.path.empty()) fail("file spec needs path=");
    return spec;
  }
  if (spec.kind != "random_dense" && spec.kind != "spd" && spec.kind != "poisson2d" && spec.kind != "identity" &&
      spec.kind != "zeros")
    fail("unknown matrix kind '" + spec.kind + "'");
  if (!p.params.contains("n") && !(spec.kind == "poisson2d" && p.params.contains("k")))
    fail("matrix spec needs n=");
  if (spec.kind == "poisson2d") {
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(double(spec.n))));
    if (k * k != spec.n) fail("poisson2d needs n to be a perfect square");
  }
  return spec;
}

Matrix<double> random_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix<double> m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = uniform01(rng);
  return m;
}

Matrix<double> generate(const MatrixSpec& spec, std::uint64_t default_seed) {
  const std::size_t n = spec.n;
  const std::uint64_t seed = spec.seed.value_or(default_seed);
  if (spec.kind == "file") return io::load_matrix(spec.path);
  if (spec.kind == "identity") return Matrix<double>::identity(n);
  if (spec.kind == "zeros") return Matrix<double>(n, n);
  if (spec.kind == "random_dense") {
    Matrix<double> a = random_uniform(n, n, seed);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += spec.shift;
    return a;
  }
  if (spec.kind == "spd") {
    const Matrix<double> m = random_uniform(n, n, seed);
    Matrix<double> a(n, n);
    Context ctx;
    kernels::gemm(ctx, true, false, 1.0, m.view(), m.view(), 0.0, a.view());
    // Symmetrize exactly and shift.
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = j + 1; i < n; ++i) a(j, i) = a(i, j);
      a(j, j) += double(n);
    }
    return a;
  }
  if (spec.kind == "poisson2d") {
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(double(n))));
    Matrix<double> a(n, n);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t i = r * k + c;
        a(i, i) = 4;
        if (c > 0) a(i, i - 1) = -1;
        if (c + 1 < k) a(i, i + 1) = -1;
        if (r > 0) a(i, i - k) = -1;
        if (r + 1 < k) a(i, i + k) = -1;
      }
    }
    return a;
  }
  fail("unknown matrix kind '" + spec.kind + "'");
}

Vector<double> make_rhs(std::string_view text, std::size_t n, std::uint64_t default_seed) {
  const Parsed p = split_spec(text);
  if (p.kind == "ones") return Vector<double>(n, 1.0);
  if (p.kind == "zeros") return Vector<double>(n, 0.0);
  if (p.kind == "random") {
    std::uint64_t seed = default_seed;
    if (auto it = p.params.find("seed"); it != p.params.end()) seed = to_number<std::uint64_t>(it->second, "seed");
    std::mt19937_64 rng(seed);
    Vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = uniform01(rng);
    return b;
  }
  if (p.kind == "file") {
    auto it = p.params.find("path");
    if (it == p.params.end()) fail("file rhs needs path=");
    const Matrix<double> m = io::load_matrix(it->second);
    if (m.cols() != 1 || m.rows() != n)
      throw Error(ErrorKind::DimensionMismatch, "right-hand side file is not an n x 1 matrix");
    return Vector<double>(std::vector<double>(m.storage().begin(), m.storage().end()));
  }
  fail("unknown right-hand side spec '" + std::string(text) + "'");
}

}  // namespace gridsolve::matgen
