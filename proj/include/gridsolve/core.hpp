#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace gridsolve {

enum class ErrorKind {
  DimensionMismatch,
  SingularPivot,
  NotSpd,
  Breakdown,
  MaxIterations,
  DescriptorMismatch,
  CollectiveMisuse,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every fallible library operation reports failure by throwing this, tagged
/// with exactly one ErrorKind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }
  /// what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

// Wire tags are part of the binary matrix format; do not renumber.
enum class Precision : std::uint64_t { F32 = 1, F64 = 2 };

std::string_view to_string(Precision p) noexcept;
Precision parse_precision(std::string_view name);

template <class T>
concept Scalar = std::is_same_v<T, float> || std::is_same_v<T, double>;

template <Scalar T>
inline constexpr Precision precision_of = std::is_same_v<T, float> ? Precision::F32 : Precision::F64;

/// Unit roundoff (distance from 1 to the next representable value).
double machine_epsilon(Precision p) noexcept;

template <Scalar T>
constexpr T epsilon() noexcept {
  return std::numeric_limits<T>::epsilon();
}

/// Non-owning column-major view. Element (i, j) lives at data[i + j * lead].
/// Rows in [rows, lead) are padding and never touched through the view.
template <class T>
class MatrixView {
 public:
  using value_type = std::remove_const_t<T>;

  MatrixView() = default;
  MatrixView(T* data, std::size_t rows, std::size_t cols, std::size_t lead)
      : data_(data), rows_(rows), cols_(cols), lead_(lead) {
    assert(lead >= rows);
  }

  // MatrixView<T> -> MatrixView<const T>
  template <class U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  MatrixView(const MatrixView<U>& other)  // NOLINT(google-explicit-constructor)
      : MatrixView(other.data(), other.rows(), other.cols(), other.lead()) {}

  T* data() const noexcept { return data_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t lead() const noexcept { return lead_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  T& operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i + j * lead_];
  }

  std::span<T> col(std::size_t j) const noexcept { return {data_ + j * lead_, rows_}; }

  MatrixView sub(std::size_t i, std::size_t j, std::size_t m, std::size_t n) const noexcept {
    assert(i + m <= rows_ && j + n <= cols_);
    if (m == 0 || n == 0) return MatrixView(data_, m, n, lead_ < m ? m : lead_);
    return MatrixView(data_ + i + j * lead_, m, n, lead_);
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t lead_ = 0;
};

/// Owning column-major matrix with an explicit leading dimension.
template <Scalar T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : Matrix(rows, cols, rows) {}
  Matrix(std::size_t rows, std::size_t cols, std::size_t lead)
      : rows_(rows), cols_(cols), lead_(lead), data_(lead * cols, T(0)) {
    if (lead < rows) throw Error(ErrorKind::DimensionMismatch, "leading dimension smaller than row count");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t lead() const noexcept { return lead_; }

  T& operator()(std::size_t i, std::size_t j) noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i + j * lead_];
  }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i + j * lead_];
  }

  std::span<T> storage() noexcept { return data_; }
  std::span<const T> storage() const noexcept { return data_; }

  MatrixView<T> view() noexcept { return {data_.data(), rows_, cols_, lead_}; }
  MatrixView<const T> view() const noexcept { return {data_.data(), rows_, cols_, lead_}; }

  MatrixView<T> sub(std::size_t i, std::size_t j, std::size_t m, std::size_t n) noexcept {
    return view().sub(i, j, m, n);
  }
  MatrixView<const T> sub(std::size_t i, std::size_t j, std::size_t m, std::size_t n) const noexcept {
    return view().sub(i, j, m, n);
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
    for (std::size_t j = 0; j < a.cols_; ++j)
      for (std::size_t i = 0; i < a.rows_; ++i)
        if (a(i, j) != b(i, j)) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t lead_ = 0;
  std::vector<T> data_;
};

/// Owning stride-1 vector.
template <Scalar T>
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, T fill = T(0)) : data_(n, fill) {}
  Vector(std::initializer_list<T> init) : data_(init) {}
  explicit Vector(std::vector<T> data) : data_(std::move(data)) {}

  std::size_t size() const noexcept { return data_.size(); }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }

  /// n x 1 matrix view over the same storage.
  MatrixView<T> as_matrix() noexcept { return {data_.data(), data_.size(), 1, data_.size()}; }
  MatrixView<const T> as_matrix() const noexcept { return {data_.data(), data_.size(), 1, data_.size()}; }

  const std::vector<T>& values() const noexcept { return data_; }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<T> data_;
};

/// Outcome of an iterative (or direct) solve.
struct SolveReport {
  std::string method;
  std::size_t iterations = 0;
  bool converged = false;
  bool breakdown = false;
  double final_relres = 0.0;
  std::vector<double> residual_history;
  /// Set when the solve did not converge: MaxIterations or Breakdown.
  std::optional<ErrorKind> failure;

  /// Throws the recorded failure, if any.
  void raise_if_failed() const;
};

}  // namespace gridsolve
