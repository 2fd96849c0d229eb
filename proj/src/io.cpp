#include "gridsolve/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "gridsolve/wire.hpp"

namespace gridsolve::io {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::IoError, what); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view tok) {
  double v = 0;
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) fail("bad number '" + std::string(tok) + "'");
  return v;
}

// Next line that is neither blank nor a comment.
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "mm") return Format::MatrixMarket;
  if (name == "bin") return Format::Binary;
  fail("unknown matrix format '" + std::string(name) + "' (expected mm or bin)");
}

bool is_symmetric(const Matrix<double>& a) noexcept {
  if (a.rows() != a.cols()) return false;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = j + 1; i < a.rows(); ++i)
      if (a(i, j) != a(j, i)) return false;
  return true;
}

void write_matrix_market(std::ostream& out, const Matrix<double>& a, bool symmetric) {
  if (symmetric && a.rows() != a.cols()) fail("symmetric Matrix Market output needs a square matrix");
  out << "%%MatrixMarket matrix array real " << (symmetric ? "symmetric" : "general") << '\n';
  out << a.rows() << ' ' << a.cols() << '\n';
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = symmetric ? j : 0; i < a.rows(); ++i) out << shortest(a(i, j)) << '\n';
  if (!out) fail("write failed");
}

Matrix<double> read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("empty Matrix Market stream");
  std::istringstream banner(lower(line));
  std::string tag, object, layout, field, symmetry;
  banner >> tag >> object >> layout >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix") fail("missing %%MatrixMarket matrix banner");
  if (layout != "array" && layout != "coordinate") fail("unsupported Matrix Market layout '" + layout + "'");
  const bool pattern = field == "pattern";
  if (field != "real" && field != "integer" && !(pattern && layout == "coordinate"))
    fail("unsupported Matrix Market field '" + field + "'");
  const bool sym = symmetry == "symmetric";
  if (!sym && symmetry != "general") fail("unsupported Matrix Market symmetry '" + symmetry + "'");

  if (!next_data_line(in, line)) fail("missing Matrix Market size line");
  std::istringstream size_line(line);
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(size_line >> rows >> cols)) fail("bad Matrix Market size line");
  if (layout == "coordinate" && !(size_line >> nnz)) fail("coordinate size line needs an entry count");
  if (sym && rows != cols) fail("symmetric Matrix Market matrix is not square");

  Matrix<double> a(rows, cols);
  std::string tok;
  if (layout == "array") {
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t i = sym ? j : 0; i < rows; ++i) {
        if (!(in >> tok)) fail("Matrix Market array ends early");
        a(i, j) = parse_double(tok);
        if (sym) a(j, i) = a(i, j);
      }
    }
    return a;
  }
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!next_data_line(in, line)) fail("Matrix Market coordinate data ends early");
    std::istringstream entry(line);
    std::size_t i = 0, j = 0;
    std::string v;
    if (!(entry >> i >> j) || (!pattern && !(entry >> v))) fail("bad coordinate entry '" + line + "'");
    if (i == 0 || j == 0 || i > rows || j > cols) fail("coordinate entry outside the matrix");
    const double x = pattern ? 1.0 : parse_double(v);
    a(i - 1, j - 1) += x;
    if (sym && i != j) a(j - 1, i - 1) += x;
  }
  return a;
}

void write_binary(std::ostream& out, const Matrix<double>& a, Precision precision) {
  wire::Bytes bytes;
  if (precision == Precision::F64) {
    bytes = wire::encode_matrix<double>(a.view());
  } else {
    Matrix<float> f(a.rows(), a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) f(i, j) = static_cast<float>(a(i, j));
    bytes = wire::encode_matrix<float>(f.view());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail("write failed");
}

Matrix<double> read_binary(std::istream& in) {
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::span<const std::byte> bytes(reinterpret_cast<const std::byte*>(raw.data()), raw.size());
  wire::Reader r(bytes);
  const auto header = wire::read_matrix_header(r);
  const std::size_t elem = header.precision == Precision::F64 ? 8 : 4;
  if (header.rows != 0 && header.cols != 0 && r.remaining() / elem / header.rows < header.cols)
    fail("binary matrix payload shorter than its header claims");
  if (r.remaining() != header.rows * header.cols * elem) fail("binary matrix has trailing bytes");
  if (header.precision == Precision::F64) return wire::decode_matrix<double>(bytes);
  const Matrix<float> f = wire::decode_matrix<float>(bytes);
  Matrix<double> a(f.rows(), f.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = f(i, j);
  return a;
}

void save_matrix(const std::string& path, const Matrix<double>& a, Format format, Precision precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  if (format == Format::MatrixMarket) write_matrix_market(out, a, is_symmetric(a));
  else write_binary(out, a, precision);
}

Matrix<double> load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  char head[2] = {};
  in.read(head, 2);
  const bool mm = in.gcount() == 2 && head[0] == '%' && head[1] == '%';
  in.clear();
  in.seekg(0);
  return mm ? read_matrix_market(in) : read_binary(in);
}

}  // namespace gridsolve::io
