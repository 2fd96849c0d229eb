#include "gridsolve/core.hpp"

namespace gridsolve {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularPivot: return "SingularPivot";
    case ErrorKind::NotSpd: return "NotSpd";
    case ErrorKind::Breakdown: return "Breakdown";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::DescriptorMismatch: return "DescriptorMismatch";
    case ErrorKind::CollectiveMisuse: return "CollectiveMisuse";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

std::string_view to_string(Precision p) noexcept {
  return p == Precision::F32 ? "f32" : "f64";
}

Precision parse_precision(std::string_view name) {
  if (name == "f32" || name == "F32") return Precision::F32;
  if (name == "f64" || name == "F64") return Precision::F64;
  throw Error(ErrorKind::DimensionMismatch, "unknown precision '" + std::string(name) + "'");
}

double machine_epsilon(Precision p) noexcept {
  return p == Precision::F32 ? double(std::numeric_limits<float>::epsilon())
                             : std::numeric_limits<double>::epsilon();
}

void SolveReport::raise_if_failed() const {
  if (failure) throw Error(*failure, method + " stopped after " + std::to_string(iterations) + " iterations");
}

}  // namespace gridsolve
