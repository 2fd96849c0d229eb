#pragma once

// Little-endian byte encoding shared by the transport payloads and the raw
// binary matrix file format.
//
// Matrix layout: 24-byte header of three u64 fields (rows, cols, precision
// tag) followed by rows * cols IEEE-754 scalars in column-major order.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "gridsolve/core.hpp"

namespace gridsolve::wire {

using Bytes = std::vector<std::byte>;

inline constexpr std::size_t matrix_header_bytes = 24;

namespace detail {

template <class U>
U byteswap(U v) noexcept {
  U out{};
  auto* src = reinterpret_cast<const unsigned char*>(&v);
  auto* dst = reinterpret_cast<unsigned char*>(&out);
  for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
  return out;
}

template <class U>
U to_le(U v) noexcept {
  if constexpr (std::endian::native == std::endian::little) return v;
  else return byteswap(v);
}

template <class T>
using bits_t = std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                  std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint8_t>>;

}  // namespace detail

class Writer {
 public:
  Writer() = default;
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  template <class T>
    requires(std::is_arithmetic_v<T>)
  Writer& put(T v) {
    using U = detail::bits_t<T>;
    static_assert(sizeof(U) == sizeof(T));
    const U le = detail::to_le(std::bit_cast<U>(v));
    const auto* p = reinterpret_cast<const std::byte*>(&le);
    out_.insert(out_.end(), p, p + sizeof(U));
    return *this;
  }

  template <class T>
  Writer& put_all(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::byte*>(values.data());
      out_.insert(out_.end(), p, p + values.size_bytes());
    } else {
      for (const T& v : values) put(v);
    }
    return *this;
  }

  Writer& put_bytes(std::span<const std::byte> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
    return *this;
  }

  Bytes take() && { return std::move(out_); }
  const Bytes& bytes() const noexcept { return out_; }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  template <class T>
    requires(std::is_arithmetic_v<T>)
  T get() {
    using U = detail::bits_t<T>;
    need(sizeof(U));
    U le;
    std::memcpy(&le, in_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return std::bit_cast<T>(detail::to_le(le));
  }

  template <class T>
  void get_all(std::span<T> out) {
    need(out.size_bytes());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), in_.data() + pos_, out.size_bytes());
      pos_ += out.size_bytes();
    } else {
      for (T& v : out) v = get<T>();
    }
  }

  std::span<const std::byte> rest() const noexcept { return in_.subspan(pos_); }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorKind::IoError, "truncated payload");
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

template <Scalar T>
Bytes encode(std::span<const T> values) {
  Writer w(values.size_bytes());
  w.put_all(values);
  return std::move(w).take();
}

template <Scalar T>
std::vector<T> decode(std::span<const std::byte> bytes) {
  if (bytes.size() % sizeof(T) != 0) throw Error(ErrorKind::IoError, "payload is not a whole number of scalars");
  std::vector<T> out(bytes.size() / sizeof(T));
  Reader(bytes).get_all(std::span<T>(out));
  return out;
}

template <Scalar T>
void encode_matrix(Writer& w, MatrixView<const T> m) {
  w.put(std::uint64_t(m.rows())).put(std::uint64_t(m.cols())).put(std::uint64_t(precision_of<T>));
  for (std::size_t j = 0; j < m.cols(); ++j) w.put_all(std::span<const T>(m.col(j)));
}

template <Scalar T>
Bytes encode_matrix(MatrixView<const T> m) {
  Writer w(matrix_header_bytes + m.rows() * m.cols() * sizeof(T));
  encode_matrix(w, m);
  return std::move(w).take();
}

struct MatrixHeader {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  Precision precision = Precision::F64;
};

inline MatrixHeader read_matrix_header(Reader& r) {
  MatrixHeader h;
  h.rows = r.get<std::uint64_t>();
  h.cols = r.get<std::uint64_t>();
  const auto tag = r.get<std::uint64_t>();
  if (tag != std::uint64_t(Precision::F32) && tag != std::uint64_t(Precision::F64))
    throw Error(ErrorKind::IoError, "unknown precision tag " + std::to_string(tag));
  h.precision = Precision(tag);
  return h;
}

template <Scalar T>
Matrix<T> decode_matrix(Reader& r) {
  const MatrixHeader h = read_matrix_header(r);
  if (h.precision != precision_of<T>)
    throw Error(ErrorKind::DimensionMismatch, "matrix payload precision differs from the requested precision");
  if (h.rows != 0 && h.cols > r.remaining() / sizeof(T) / h.rows)
    throw Error(ErrorKind::IoError, "matrix payload shorter than its header claims");
  Matrix<T> m(h.rows, h.cols);
  r.get_all(m.storage());
  return m;
}

template <Scalar T>
Matrix<T> decode_matrix(std::span<const std::byte> bytes) {
  Reader r(bytes);
  return decode_matrix<T>(r);
}

}  // namespace gridsolve::wire
