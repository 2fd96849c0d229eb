#pragma once

// Matrix files: Matrix Market (dense array format written, array and
// coordinate read) and the raw little-endian binary layout of wire.hpp.
// All failures throw IoError.

#include <iosfwd>
#include <string>
#include <string_view>

#include "gridsolve/core.hpp"

namespace gridsolve::io {

enum class Format { MatrixMarket, Binary };

/// "mm" or "bin".
Format parse_format(std::string_view name);

/// Array format; `symmetric` stores only the lower triangle.
void write_matrix_market(std::ostream& out, const Matrix<double>& a, bool symmetric);
/// Array or coordinate, real or integer, general or symmetric.
Matrix<double> read_matrix_market(std::istream& in);

void write_binary(std::ostream& out, const Matrix<double>& a, Precision precision);
/// F32 payloads are widened.
Matrix<double> read_binary(std::istream& in);

void save_matrix(const std::string& path, const Matrix<double>& a, Format format, Precision precision = Precision::F64);
/// Detects the format from the file's first bytes.
Matrix<double> load_matrix(const std::string& path);

bool is_symmetric(const Matrix<double>& a) noexcept;

}  // namespace gridsolve::io
