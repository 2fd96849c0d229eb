#include "gridsolve/driver.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "gridsolve/direct.hpp"
#include "gridsolve/distgrid.hpp"
#include "gridsolve/krylov.hpp"

namespace gridsolve::driver {

namespace {

[[noreturn]] void io_fail(const std::string& what) { throw Error(ErrorKind::IoError, what); }

template <Scalar T>
struct RankResult {
  std::vector<T> x;
  SolveReport report;
  std::uint64_t flops = 0;
  double seconds = 0;
  std::size_t local_bytes = 0;
};

template <Scalar T>
RankResult<T> solve_on_rank(Comm& comm, const SolveOptions& o, std::pair<std::size_t, std::size_t> shape,
                            const Matrix<T>& a, const Vector<T>& b) {
  Context ctx(o.backend);
  const ProcGrid grid(comm, shape.first, shape.second);
  const std::size_t n = a.rows();
  const bool root = comm.rank().value == 0;
  const auto desc = BlockCyclicDesc::create(grid, n, n, o.nb, o.nb);
  const auto vdesc = vector_desc(desc);
  DistMatrix<T> da = scatter(root ? a : Matrix<T>{}, desc);
  const DistVector<T> db = scatter(root ? b : Vector<T>{}, vdesc);

  RankResult<T> out;
  out.local_bytes = da.local.rows() * da.local.cols() * sizeof(T);
  ctx.flops().reset();
  comm.barrier(grid.world_group());
  const auto t0 = std::chrono::steady_clock::now();

  DistVector<T> x;
  if (o.method == "lu") {
    const auto f = lu_factor_dist(ctx, std::move(da));
    x = lu_solve(ctx, f, db);
    out.report.method = "lu";
  } else if (o.method == "chol") {
    const auto f = chol_factor_dist(ctx, std::move(da));
    x = chol_solve(ctx, f, db);
    out.report.method = "chol";
  } else {
    const DistSpace<T> sp(ctx);
    const auto op = dist_operator(ctx, da);
    KrylovConfig cfg;
    cfg.tol = o.tol;
    cfg.max_iters = o.max_iters;
    cfg.restart = o.restart;
    auto x0 = DistVector<T>::zeros(vdesc);
    KrylovResult<DistVector<T>> r;
    if (o.method == "cg") r = cg(sp, op, db, std::move(x0), cfg);
    else if (o.method == "gmres") r = gmres(sp, op, db, std::move(x0), cfg);
    else if (o.method == "bicg") r = bicg(sp, op, db, std::move(x0), cfg);
    else r = bicgstab(sp, op, db, std::move(x0), cfg);
    x = std::move(r.x);
    out.report = std::move(r.report);
  }
  comm.barrier(grid.world_group());
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.flops = ctx.flops().value();
  out.x = allgather(x).values();
  return out;
}

template <Scalar T>
SolveOutcome solve_typed(const SolveOptions& o, std::pair<std::size_t, std::size_t> shape, const Matrix<double>& a,
                         const Vector<double>& b) {
  const std::size_t n = a.rows();
  Matrix<T> at(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) at(i, j) = static_cast<T>(a(i, j));
  Vector<T> bt(n);
  for (std::size_t i = 0; i < n; ++i) bt[i] = static_cast<T>(b[i]);

  auto results = launch(
      o.ranks, [&](Comm& comm) { return solve_on_rank<T>(comm, o, shape, at, bt); }, o.launch);

  SolveOutcome out;
  out.grid = shape;
  out.report = results[0].report;
  out.wall_time_s = results[0].seconds;
  out.x.assign(results[0].x.begin(), results[0].x.end());
  for (const auto& r : results) {
    out.flops += r.flops;
    out.local_bytes = std::max(out.local_bytes, r.local_bytes);
  }

  double rr = 0, bb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < n; ++j) s -= a(i, j) * out.x[j];
    rr += s * s;
    bb += b[i] * b[i];
  }
  out.relres = bb == 0 ? std::sqrt(rr) : std::sqrt(rr / bb);
  if (!is_iterative(o.method)) {
    out.report.converged = true;
    out.report.final_relres = out.relres;
  }
  return out;
}

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class U>
U parse_num(const std::string& s, const char* field) {
  U v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) io_fail(std::string("bad ") + field + " value '" + s + "'");
  return v;
}

}  // namespace

bool is_iterative(std::string_view m) noexcept { return m == "cg" || m == "gmres" || m == "bicg" || m == "bicgstab"; }

std::pair<std::size_t, std::size_t> parse_grid(std::string_view text) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) io_fail("grid must look like PxQ, got '" + std::string(text) + "'");
  const std::string p(text.substr(0, x)), q(text.substr(x + 1));
  return {parse_num<std::size_t>(p, "grid"), parse_num<std::size_t>(q, "grid")};
}

std::string format_grid(std::pair<std::size_t, std::size_t> g) {
  return std::to_string(g.first) + "x" + std::to_string(g.second);
}

SolveOutcome run_solve(const SolveOptions& o, const Matrix<double>& a, const Vector<double>& b) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix is not square");
  if (b.size() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "right-hand side length differs from the matrix order");
  if (o.method != "lu" && o.method != "chol" && !is_iterative(o.method))
    throw Error(ErrorKind::DimensionMismatch, "unknown method '" + o.method + "'");
  if (o.nb == 0) throw Error(ErrorKind::DescriptorMismatch, "block size must be positive");
  if (o.ranks == 0) throw Error(ErrorKind::CollectiveMisuse, "need at least one rank");
  const auto shape = o.grid.value_or(ProcGrid::near_square(o.ranks));
  if (shape.first * shape.second != o.ranks)
    throw Error(ErrorKind::DescriptorMismatch, "grid " + format_grid(shape) + " does not hold " +
                                                   std::to_string(o.ranks) + " ranks");
  return o.precision == Precision::F32 ? solve_typed<float>(o, shape, a, b) : solve_typed<double>(o, shape, a, b);
}

bool operator==(const BenchRecord& a, const BenchRecord& b) {
  return a.method == b.method && a.n == b.n && a.ranks == b.ranks && a.grid == b.grid && a.nb == b.nb &&
         a.backend == b.backend && a.precision == b.precision && a.wall_time_s == b.wall_time_s &&
         a.flops == b.flops && a.iterations == b.iterations && a.final_relres == b.final_relres &&
         a.speedup_vs_serial == b.speedup_vs_serial;
}

std::vector<BenchRecord> run_bench(const SolveOptions& opts, const std::vector<std::size_t>& ranks_list,
                                   std::size_t repeat, const Matrix<double>& a, const Vector<double>& b) {
  if (repeat == 0) throw Error(ErrorKind::DimensionMismatch, "repeat must be at least 1");
  std::vector<std::size_t> order{1};
  for (auto r : ranks_list)
    if (std::find(order.begin(), order.end(), r) == order.end()) order.push_back(r);

  std::vector<BenchRecord> out;
  double serial_time = 0;
  for (const std::size_t ranks : order) {
    SolveOptions o = opts;
    o.ranks = ranks;
    if (!o.grid || o.grid->first * o.grid->second != ranks) o.grid = ProcGrid::near_square(ranks);
    std::vector<double> times;
    SolveOutcome first;
    for (std::size_t k = 0; k < repeat; ++k) {
      SolveOutcome res = run_solve(o, a, b);
      times.push_back(res.wall_time_s);
      if (k == 0) first = std::move(res);
    }
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    const double median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    if (ranks == 1) serial_time = median;

    BenchRecord rec;
    rec.method = o.method;
    rec.n = a.rows();
    rec.ranks = ranks;
    rec.grid = format_grid(first.grid);
    rec.nb = o.nb;
    rec.backend = o.backend;
    rec.precision = std::string(to_string(o.precision));
    rec.wall_time_s = median;
    rec.flops = first.flops;
    if (is_iterative(o.method)) rec.iterations = first.report.iterations;
    rec.final_relres = first.report.final_relres;
    rec.speedup_vs_serial = ranks == 1 ? 1.0 : (median > 0 ? serial_time / median : 0.0);
    rec.local_bytes = first.local_bytes;
    out.push_back(std::move(rec));
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << csv_header << '\n';
  for (const auto& r : records) {
    for (const auto* s : {&r.method, &r.grid, &r.backend, &r.precision})
      if (s->find_first_of(",\n\"") != std::string::npos) io_fail("CSV field contains a separator: " + *s);
    out << r.method << ',' << r.n << ',' << r.ranks << ',' << r.grid << ',' << r.nb << ',' << r.backend << ','
        << r.precision << ',' << shortest(r.wall_time_s) << ',' << r.flops << ','
        << (r.iterations ? std::to_string(*r.iterations) : std::string()) << ',' << shortest(r.final_relres) << ','
        << shortest(r.speedup_vs_serial) << '\n';
  }
  if (!out) io_fail("CSV write failed");
}

std::vector<BenchRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != csv_header) io_fail("CSV header does not match");
  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 12) io_fail("CSV row has " + std::to_string(f.size()) + " fields: " + line);
    BenchRecord r;
    r.method = f[0];
    r.n = parse_num<std::size_t>(f[1], "n");
    r.ranks = parse_num<std::size_t>(f[2], "ranks");
    r.grid = f[3];
    r.nb = parse_num<std::size_t>(f[4], "nb");
    r.backend = f[5];
    r.precision = f[6];
    r.wall_time_s = parse_num<double>(f[7], "wall_time_s");
    r.flops = parse_num<std::uint64_t>(f[8], "flops");
    if (!f[9].empty()) r.iterations = parse_num<std::size_t>(f[9], "iterations");
    r.final_relres = parse_num<double>(f[10], "final_relres");
    r.speedup_vs_serial = parse_num<double>(f[11], "speedup_vs_serial");
    out.push_back(std::move(r));
  }
  return out;
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return 2;
    case ErrorKind::SingularPivot:
    case ErrorKind::NotSpd: return 3;
    case ErrorKind::MaxIterations: return 4;
    case ErrorKind::Breakdown: return 5;
    case ErrorKind::DescriptorMismatch: return 6;
    case ErrorKind::CollectiveMisuse: return 7;
    case ErrorKind::IoError: return 8;
  }
  return 1;
}

}  // namespace gridsolve::driver
