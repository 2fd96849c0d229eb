#pragma once

// End-to-end solve and benchmark runs over in-process ranks: distribute,
// solve, gather, measure. Used by the command-line tool and the bindings.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridsolve/core.hpp"
#include "gridsolve/transport.hpp"

namespace gridsolve::driver {

struct SolveOptions {
  std::string method = "lu";  // lu, chol, cg, gmres, bicg, bicgstab
  std::size_t ranks = 1;
  /// Near-square when unset.
  std::optional<std::pair<std::size_t, std::size_t>> grid;
  std::size_t nb = 64;
  double tol = 1e-8;
  std::optional<std::size_t> max_iters;
  std::size_t restart = 30;
  Precision precision = Precision::F64;
  std::string backend = "direct";
  LaunchOptions launch = LaunchOptions::from_env();
};

struct SolveOutcome {
  SolveReport report;
  std::vector<double> x;
  /// ||b - A x|| / ||b|| recomputed in double against the input matrix.
  double relres = 0;
  /// Summed over ranks; solve phase only.
  std::uint64_t flops = 0;
  double wall_time_s = 0;
  std::pair<std::size_t, std::size_t> grid{1, 1};
  /// Largest local matrix block over the ranks, in bytes.
  std::size_t local_bytes = 0;
};

/// Throws the library Error of a failed direct solve; iterative failures are
/// left in the report.
SolveOutcome run_solve(const SolveOptions& opts, const Matrix<double>& a, const Vector<double>& b);

/// "PxQ".
std::pair<std::size_t, std::size_t> parse_grid(std::string_view text);
std::string format_grid(std::pair<std::size_t, std::size_t> grid);

struct BenchRecord {
  std::string method;
  std::size_t n = 0;
  std::size_t ranks = 1;
  std::string grid;
  std::size_t nb = 0;
  std::string backend;
  std::string precision;
  double wall_time_s = 0;
  std::uint64_t flops = 0;
  std::optional<std::size_t> iterations;  // iterative methods only
  double final_relres = 0;
  double speedup_vs_serial = 1;
  /// Not part of the CSV.
  std::size_t local_bytes = 0;

  /// Compares the CSV fields.
  friend bool operator==(const BenchRecord& a, const BenchRecord& b);
};

inline constexpr const char* csv_header =
    "method,n,ranks,grid,nb,backend,precision,wall_time_s,flops,iterations,final_relres,speedup_vs_serial";

/// Runs every rank count on the same problem, the 1-rank baseline first
/// (added when missing). Wall time is the median over `repeat` runs.
std::vector<BenchRecord> run_bench(const SolveOptions& opts, const std::vector<std::size_t>& ranks_list,
                                   std::size_t repeat, const Matrix<double>& a, const Vector<double>& b);

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records);
/// Throws IoError on a malformed table.
std::vector<BenchRecord> parse_csv(std::istream& in);

/// Process exit status for a failure kind.
int exit_code(ErrorKind kind) noexcept;

bool is_iterative(std::string_view method) noexcept;

}  // namespace gridsolve::driver
