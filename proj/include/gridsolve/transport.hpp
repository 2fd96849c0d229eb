#pragma once

// Message passing between ranks, and an in-process reference implementation
// that runs every rank as a thread of the calling process.
//
// Ordering: point-to-point messages are FIFO per (source, dest, tag).
// Collectives reduce in ascending member order with a sequential fold, so a
// floating-point reduction gives bitwise identical results on every run.

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gridsolve/core.hpp"
#include "gridsolve/wire.hpp"

namespace gridsolve {

struct RankId {
  std::size_t value = 0;
  friend auto operator<=>(const RankId&, const RankId&) = default;
};

/// An ordered set of ranks that take part in a collective together.
class CommGroup {
 public:
  CommGroup(std::vector<RankId> members, RankId me);

  const std::vector<RankId>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  std::size_t my_index() const noexcept { return my_index_; }
  RankId me() const noexcept { return members_[my_index_]; }
  RankId member(std::size_t i) const noexcept { return members_[i]; }
  /// Position of `r` in the group, if it is a member.
  std::optional<std::size_t> index_of(RankId r) const noexcept;
  /// Identical on every member; derived from the member list.
  std::uint64_t id() const noexcept { return id_; }

 private:
  std::vector<RankId> members_;
  std::size_t my_index_ = 0;
  std::uint64_t id_ = 0;
};

enum class ReduceOp : std::uint8_t { Sum = 1, Max = 2, MaxAbsLoc = 3 };

/// Operand of a MaxAbsLoc reduction.
template <Scalar T>
struct ValueLoc {
  T value{};
  std::uint64_t index = 0;
  friend bool operator==(const ValueLoc&, const ValueLoc&) = default;
};

struct LaunchOptions {
  /// A rank blocked in a receive for longer than this aborts the launch.
  std::chrono::milliseconds deadlock_timeout{30'000};
  /// When set, every transport call yields or sleeps at random (seeded).
  std::optional<std::uint64_t> jitter_seed;
  /// Record every collective call so ordering can be audited.
  bool trace = false;

  /// Defaults, with GRIDSOLVE_DEADLOCK_TIMEOUT_S (seconds) applied if set.
  static LaunchOptions from_env();
};

struct TraceEntry {
  std::uint64_t group = 0;
  std::string op;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

namespace detail {
struct World;
}

/// The transport handle of one rank. Only its owning rank may use it.
class Comm {
 public:
  Comm(detail::World& world, RankId rank, const LaunchOptions& opts);
  Comm(const Comm&) = delete;
  Comm& operator=(const Comm&) = delete;

  RankId rank() const noexcept { return rank_; }
  std::size_t size() const noexcept;

  CommGroup world() const;
  CommGroup group(std::vector<RankId> members) const;

  /// Non-blocking: the payload is buffered. `tag` must be non-negative and
  /// `dest` must not be the caller.
  void send(RankId dest, int tag, wire::Bytes payload);
  /// Blocks until a matching message arrives.
  wire::Bytes recv(RankId source, int tag);

  /// Every member returns the root's payload.
  wire::Bytes broadcast(const CommGroup& group, RankId root, wire::Bytes payload);

  /// Elementwise Sum or Max over all members; `values` is replaced by the result.
  template <Scalar T>
  void allreduce(const CommGroup& group, ReduceOp op, std::span<T> values);

  template <Scalar T>
  T allreduce(const CommGroup& group, ReduceOp op, T value) {
    allreduce(group, op, std::span<T>(&value, 1));
    return value;
  }

  /// Maximal |value| with its index; ties go to the smallest index.
  template <Scalar T>
  ValueLoc<T> allreduce(const CommGroup& group, ReduceOp op, ValueLoc<T> value);

  void barrier(const CommGroup& group);

  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

 private:
  using Fold = std::function<void(wire::Bytes& acc, std::span<const std::byte> next)>;

  void send_raw(RankId dest, int tag, wire::Bytes payload);
  wire::Bytes recv_raw(RankId source, int tag);
  wire::Bytes reduce_raw(const CommGroup& group, ReduceOp op, std::uint8_t scalar_tag, wire::Bytes mine,
                         const Fold& fold);
  void record(const CommGroup& group, const char* op);
  void jitter();

  detail::World& world_;
  RankId rank_;
  std::optional<std::mt19937_64> rng_;
  bool tracing_ = false;
  std::vector<TraceEntry> trace_;
};

template <Scalar T>
void Comm::allreduce(const CommGroup& group, ReduceOp op, std::span<T> values) {
  if (op == ReduceOp::MaxAbsLoc)
    throw Error(ErrorKind::CollectiveMisuse, "MaxAbsLoc needs a ValueLoc operand");
  record(group, op == ReduceOp::Sum ? "allreduce:sum" : "allreduce:max");
  auto fold = [op](wire::Bytes& acc, std::span<const std::byte> next) {
    auto a = wire::decode<T>(acc);
    const auto b = wire::decode<T>(next);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (op == ReduceOp::Sum) a[i] = a[i] + b[i];
      else if (b[i] > a[i]) a[i] = b[i];
    }
    acc = wire::encode<T>(std::span<const T>(a));
  };
  auto result = reduce_raw(group, op, std::uint8_t(precision_of<T>), wire::encode<T>(values), fold);
  wire::Reader(result).get_all(values);
}

template <Scalar T>
ValueLoc<T> Comm::allreduce(const CommGroup& group, ReduceOp op, ValueLoc<T> value) {
  if (op != ReduceOp::MaxAbsLoc)
    throw Error(ErrorKind::CollectiveMisuse, "ValueLoc operands reduce with MaxAbsLoc only");
  record(group, "allreduce:maxabsloc");
  auto enc = [](ValueLoc<T> v) {
    wire::Writer w;
    w.put(v.value).put(v.index);
    return std::move(w).take();
  };
  auto dec = [](std::span<const std::byte> b) {
    wire::Reader r(b);
    ValueLoc<T> v;
    v.value = r.get<T>();
    v.index = r.get<std::uint64_t>();
    return v;
  };
  auto fold = [&](wire::Bytes& acc, std::span<const std::byte> next) {
    const ValueLoc<T> a = dec(acc), b = dec(next);
    const T ma = a.value < T(0) ? -a.value : a.value;
    const T mb = b.value < T(0) ? -b.value : b.value;
    if (mb > ma || (mb == ma && b.index < a.index)) acc = enc(b);
  };
  return dec(reduce_raw(group, op, std::uint8_t(precision_of<T>) | 0x80, enc(value), fold));
}

namespace detail {

/// Runs `body(comm)` once per rank on its own thread and rethrows the first
/// failure. A rank that throws aborts the launch: ranks blocked in the
/// transport then fail with CollectiveMisuse. The originating error keeps its
/// ErrorKind; non-library exceptions surface as CollectiveMisuse.
void run_ranks(std::size_t ranks, const std::function<void(Comm&)>& body, const LaunchOptions& opts);

}  // namespace detail

/// Runs `program(comm)` concurrently on `ranks` in-process ranks and returns
/// the per-rank results in rank order.
template <class F>
auto launch(std::size_t ranks, F&& program, const LaunchOptions& opts = {}) {
  using R = std::invoke_result_t<F&, Comm&>;
  if (ranks == 0) throw Error(ErrorKind::CollectiveMisuse, "launch needs at least one rank");
  if constexpr (std::is_void_v<R>) {
    detail::run_ranks(ranks, [&](Comm& c) { program(c); }, opts);
  } else {
    std::vector<std::optional<R>> slots(ranks);
    detail::run_ranks(ranks, [&](Comm& c) { slots[c.rank().value].emplace(program(c)); }, opts);
    std::vector<R> out;
    out.reserve(ranks);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
  }
}

}  // namespace gridsolve
