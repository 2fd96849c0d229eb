#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridsolve/direct.hpp"
#include "gridsolve/driver.hpp"
#include "gridsolve/krylov.hpp"
#include "gridsolve/matgen.hpp"

namespace py = pybind11;
using namespace gridsolve;

namespace {

using Array = py::array_t<double, py::array::f_style | py::array::forcecast>;

Matrix<double> to_matrix(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::DimensionMismatch, "expected a 2-D array");
  const std::size_t m = a.shape(0), n = a.shape(1);
  Matrix<double> out(m, n);
  auto r = a.unchecked<2>();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) out(i, j) = r(i, j);
  return out;
}

Vector<double> to_vector(const Array& v) {
  if (v.ndim() != 1) throw Error(ErrorKind::DimensionMismatch, "expected a 1-D array");
  auto r = v.unchecked<1>();
  Vector<double> out(v.shape(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r(i);
  return out;
}

py::array_t<double> from_matrix(const Matrix<double>& a) {
  py::array_t<double, py::array::f_style> out({a.rows(), a.cols()});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) w(i, j) = a(i, j);
  return out;
}

py::array_t<double> from_vector(std::span<const double> v) {
  py::array_t<double> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict report_dict(const SolveReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["breakdown"] = r.breakdown;
  d["final_relres"] = r.final_relres;
  d["residual_history"] = r.residual_history;
  d["failure"] = r.failure ? py::object(py::str(std::string(to_string(*r.failure)))) : py::object(py::none());
  return d;
}

py::dict transfers_dict(const TransferLog& t) {
  py::dict d;
  d["h2d_copies"] = t.h2d_copies;
  d["h2d_bytes"] = t.h2d_bytes;
  d["d2h_copies"] = t.d2h_copies;
  d["d2h_bytes"] = t.d2h_bytes;
  d["allocations"] = t.allocations;
  d["frees"] = t.frees;
  return d;
}

py::tuple krylov(const std::string& method, const Array& a, const Array& b, const std::optional<Array>& x0, double tol,
                 std::optional<std::size_t> max_iters, std::size_t restart, std::optional<double> breakdown_eps) {
  const Matrix<double> m = to_matrix(a);
  const Vector<double> rhs = to_vector(b);
  Vector<double> x = x0 ? to_vector(*x0) : Vector<double>(rhs.size());
  Context ctx;
  SerialSpace<double> sp(ctx);
  const auto op = dense_operator(ctx, m);
  KrylovConfig cfg;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.restart = restart;
  cfg.breakdown_eps = breakdown_eps;
  KrylovResult<Vector<double>> r;
  if (method == "cg") r = cg(sp, op, rhs, std::move(x), cfg);
  else if (method == "gmres") r = gmres(sp, op, rhs, std::move(x), cfg);
  else if (method == "bicg") r = bicg(sp, op, rhs, std::move(x), cfg);
  else r = bicgstab(sp, op, rhs, std::move(x), cfg);
  py::dict rep = report_dict(r.report);
  rep["flops"] = ctx.flops().value();
  return py::make_tuple(from_vector(r.x.span()), rep);
}

driver::SolveOptions solve_options(const std::string& method, std::size_t ranks, const std::optional<std::string>& grid,
                                   std::size_t nb, double tol, std::optional<std::size_t> max_iters,
                                   std::size_t restart, const std::string& precision, const std::string& backend) {
  driver::SolveOptions o;
  o.method = method;
  o.ranks = ranks;
  if (grid) o.grid = driver::parse_grid(*grid);
  o.nb = nb;
  o.tol = tol;
  o.max_iters = max_iters;
  o.restart = restart;
  o.precision = parse_precision(precision);
  o.backend = backend;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dense linear-system solvers over in-process ranks";

  // Library errors surface as GridsolveError with a `kind` attribute.
  static py::exception<Error> error_type(m, "GridsolveError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("gridsolve._core").attr("GridsolveError");
      py::object inst = type(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  m.def(
      "lu_factor",
      [](const Array& a, std::size_t nb) {
        Context ctx;
        auto f = lu_factor_blocked(ctx, to_matrix(a), nb);
        return py::make_tuple(from_matrix(f.packed), f.pivots, ctx.flops().value());
      },
      py::arg("a"), py::arg("nb") = 64, "Blocked LU with partial pivoting: (packed, pivots, flops).");
  m.def(
      "lu_solve",
      [](const Array& packed, const std::vector<std::size_t>& pivots, const Array& b) {
        Context ctx;
        const LuFactors<double> f{to_matrix(packed), pivots};
        return from_vector(lu_solve(ctx, f, to_vector(b)).span());
      },
      py::arg("packed"), py::arg("pivots"), py::arg("b"));
  m.def(
      "chol_factor",
      [](const Array& a, std::size_t nb) {
        Context ctx;
        return from_matrix(chol_factor_blocked(ctx, to_matrix(a), nb).lower);
      },
      py::arg("a"), py::arg("nb") = 64, "Lower Cholesky factor; the strict upper part is left as given.");
  m.def(
      "chol_solve",
      [](const Array& lower, const Array& b) {
        Context ctx;
        const CholFactor<double> f{to_matrix(lower)};
        return from_vector(chol_solve(ctx, f, to_vector(b)).span());
      },
      py::arg("lower"), py::arg("b"));

  for (const char* name : {"cg", "gmres", "bicg", "bicgstab"}) {
    const std::string method = name;
    m.def(
        name,
        [method](const Array& a, const Array& b, const std::optional<Array>& x0, double tol,
                 std::optional<std::size_t> max_iters, std::size_t restart, std::optional<double> breakdown_eps) {
          return krylov(method, a, b, x0, tol, max_iters, restart, breakdown_eps);
        },
        py::arg("a"), py::arg("b"), py::arg("x0") = py::none(), py::arg("tol") = 1e-8,
        py::arg("max_iters") = py::none(), py::arg("restart") = 30, py::arg("breakdown_eps") = py::none(),
        "Serial Krylov solve: (x, report). Non-convergence is reported, not raised.");
  }

  m.def(
      "solve",
      [](const Array& a, const Array& b, const std::string& method, std::size_t ranks,
         const std::optional<std::string>& grid, std::size_t nb, double tol, std::optional<std::size_t> max_iters,
         std::size_t restart, const std::string& precision, const std::string& backend) {
        const auto o = solve_options(method, ranks, grid, nb, tol, max_iters, restart, precision, backend);
        driver::SolveOutcome res;
        const Matrix<double> ma = to_matrix(a);
        const Vector<double> vb = to_vector(b);
        {
          py::gil_scoped_release release;
          res = driver::run_solve(o, ma, vb);
        }
        py::dict d = report_dict(res.report);
        d["x"] = from_vector(res.x);
        d["relres"] = res.relres;
        d["flops"] = res.flops;
        d["wall_time_s"] = res.wall_time_s;
        d["grid"] = driver::format_grid(res.grid);
        d["local_bytes"] = res.local_bytes;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("method") = "lu", py::arg("ranks") = 1, py::arg("grid") = py::none(),
      py::arg("nb") = 64, py::arg("tol") = 1e-8, py::arg("max_iters") = py::none(), py::arg("restart") = 30,
      py::arg("precision") = "f64", py::arg("backend") = "direct",
      "Distribute, solve on in-process ranks and gather.");

  m.def(
      "bench",
      [](const Array& a, const Array& b, const std::string& method, const std::vector<std::size_t>& ranks_list,
         std::size_t repeat, std::size_t nb, const std::string& backend) {
        const auto o = solve_options(method, 1, std::nullopt, nb, 1e-8, std::nullopt, 30, "f64", backend);
        std::vector<driver::BenchRecord> recs;
        const Matrix<double> ma = to_matrix(a);
        const Vector<double> vb = to_vector(b);
        {
          py::gil_scoped_release release;
          recs = driver::run_bench(o, ranks_list, repeat, ma, vb);
        }
        py::list out;
        for (const auto& r : recs) {
          py::dict d;
          d["method"] = r.method;
          d["n"] = r.n;
          d["ranks"] = r.ranks;
          d["grid"] = r.grid;
          d["nb"] = r.nb;
          d["backend"] = r.backend;
          d["precision"] = r.precision;
          d["wall_time_s"] = r.wall_time_s;
          d["flops"] = r.flops;
          d["iterations"] = r.iterations;
          d["final_relres"] = r.final_relres;
          d["speedup_vs_serial"] = r.speedup_vs_serial;
          d["local_bytes"] = r.local_bytes;
          out.append(d);
        }
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("method") = "lu", py::arg("ranks_list") = std::vector<std::size_t>{1},
      py::arg("repeat") = 1, py::arg("nb") = 64, py::arg("backend") = "direct");

  m.def(
      "generate",
      [](const std::string& spec, std::uint64_t seed) {
        return from_matrix(matgen::generate(matgen::parse_matrix_spec(spec), seed));
      },
      py::arg("spec"), py::arg("seed") = 0, "Matrix from a spec such as 'spd:n=10'.");
  m.def(
      "make_rhs",
      [](const std::string& spec, std::size_t n, std::uint64_t seed) {
        return from_vector(matgen::make_rhs(spec, n, seed).span());
      },
      py::arg("spec"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "gemm",
      [](const Array& a, const Array& b, double alpha, const std::string& backend, bool trans_a, bool trans_b) {
        const Matrix<double> ma = to_matrix(a), mb = to_matrix(b);
        Matrix<double> c(trans_a ? ma.cols() : ma.rows(), trans_b ? mb.rows() : mb.cols());
        Context ctx(backend);
        kernels::gemm(ctx, trans_a, trans_b, alpha, ma.view(), mb.view(), 0.0, c.view());
        py::dict info = transfers_dict(ctx.transfers());
        info["flops"] = ctx.flops().value();
        return py::make_tuple(from_matrix(c), info);
      },
      py::arg("a"), py::arg("b"), py::arg("alpha") = 1.0, py::arg("backend") = "direct", py::arg("trans_a") = false,
      py::arg("trans_b") = false, "alpha op(A) op(B) on the chosen backend: (C, transfers).");
}
