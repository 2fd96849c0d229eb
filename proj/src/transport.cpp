#include "gridsolve/transport.hpp"

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace gridsolve {

namespace {

// Collective headers. Kinds keep point-to-point and collective traffic of
// one group apart and let a receiver detect a peer in a different collective.
enum class Kind : std::uint8_t { Broadcast = 1, ReduceIn = 2, ReduceOut = 3, BarrierIn = 4, BarrierOut = 5 };

std::uint64_t fnv1a(const std::vector<RankId>& members) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto r : members) {
    for (int b = 0; b < 8; ++b) {
      h ^= (r.value >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

// Collective traffic uses negative tags, one per group.
int collective_tag(const CommGroup& g) {
  return -1 - static_cast<int>(g.id() % 0x3fffffffu);
}

[[noreturn]] void misuse(const std::string& what) {
  throw Error(ErrorKind::CollectiveMisuse, what);
}

}  // namespace

CommGroup::CommGroup(std::vector<RankId> members, RankId me) : members_(std::move(members)) {
  auto idx = index_of(me);
  if (!idx) misuse("group does not contain the calling rank");
  my_index_ = *idx;
  id_ = fnv1a(members_);
}

std::optional<std::size_t> CommGroup::index_of(RankId r) const noexcept {
  for (std::size_t i = 0; i < members_.size(); ++i)
    if (members_[i] == r) return i;
  return std::nullopt;
}

LaunchOptions LaunchOptions::from_env() {
  LaunchOptions opts;
  if (const char* v = std::getenv("GRIDSOLVE_DEADLOCK_TIMEOUT_S")) {
    char* end = nullptr;
    const double s = std::strtod(v, &end);
    if (end != v && s > 0) opts.deadlock_timeout = std::chrono::milliseconds(static_cast<long long>(s * 1000.0));
  }
  return opts;
}

namespace detail {

struct World {
  explicit World(std::size_t n, LaunchOptions o) : size(n), opts(std::move(o)), waiting(n) {}

  const std::size_t size;
  const LaunchOptions opts;

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::tuple<std::size_t, std::size_t, int>, std::deque<wire::Bytes>> queues;
  // What each rank is blocked on, if anything.
  std::vector<std::optional<std::tuple<std::size_t, std::size_t, int>>> waiting;
  std::size_t finished = 0;
  bool aborted = false;
  std::exception_ptr root_cause;
  std::size_t root_rank = 0;

  // Caller holds `mu`. A rank woken by a send but not yet running still
  // counts as runnable, since its message is already queued.
  bool all_stuck_locked() const {
    std::size_t stuck = 0;
    for (const auto& w : waiting) {
      if (!w) continue;
      auto it = queues.find(*w);
      if (it == queues.end() || it->second.empty()) ++stuck;
    }
    return stuck + finished == size;
  }

  // Caller holds `mu`.
  void abort_locked(std::size_t rank, std::exception_ptr cause) {
    if (!aborted) {
      aborted = true;
      root_cause = std::move(cause);
      root_rank = rank;
    }
    cv.notify_all();
  }
};

void run_ranks(std::size_t ranks, const std::function<void(Comm&)>& body, const LaunchOptions& opts) {
  World world(ranks, opts);
  std::vector<std::thread> threads;
  threads.reserve(ranks);
  for (std::size_t r = 0; r < ranks; ++r) {
    threads.emplace_back([&world, &body, &opts, r] {
      try {
        Comm comm(world, RankId{r}, opts);
        body(comm);
      } catch (...) {
        std::lock_guard lock(world.mu);
        world.abort_locked(r, std::current_exception());
      }
      std::lock_guard lock(world.mu);
      ++world.finished;
      world.cv.notify_all();
    });
  }
  for (auto& t : threads) t.join();

  // A collective message nobody consumed means the ranks disagreed on the
  // root or the call sequence, e.g. two ranks both broadcasting as root.
  if (!world.root_cause) {
    for (const auto& [key, q] : world.queues) {
      if (q.empty() || std::get<2>(key) >= 0) continue;
      throw Error(ErrorKind::CollectiveMisuse, "rank " + std::to_string(std::get<1>(key)) +
                                                   ": unmatched collective message from rank " +
                                                   std::to_string(std::get<0>(key)));
    }
    return;
  }
  const std::string where = "rank " + std::to_string(world.root_rank) + ": ";
  try {
    std::rethrow_exception(world.root_cause);
  } catch (const Error& e) {
    throw Error(e.kind(), where + e.message());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::CollectiveMisuse, where + e.what());
  } catch (...) {
    throw Error(ErrorKind::CollectiveMisuse, where + "unknown failure");
  }
}

}  // namespace detail

Comm::Comm(detail::World& world, RankId rank, const LaunchOptions& opts)
    : world_(world), rank_(rank), tracing_(opts.trace) {
  if (opts.jitter_seed) rng_.emplace(*opts.jitter_seed * 0x9e3779b97f4a7c15ull + rank.value);
}

std::size_t Comm::size() const noexcept { return world_.size; }

CommGroup Comm::world() const {
  std::vector<RankId> all(world_.size);
  for (std::size_t r = 0; r < world_.size; ++r) all[r] = RankId{r};
  return CommGroup(std::move(all), rank_);
}

CommGroup Comm::group(std::vector<RankId> members) const {
  for (auto m : members)
    if (m.value >= world_.size) misuse("group member outside the launch");
  return CommGroup(std::move(members), rank_);
}

void Comm::jitter() {
  if (!rng_) return;
  const auto roll = (*rng_)() % 16;
  if (roll < 6) std::this_thread::yield();
  else if (roll == 6) std::this_thread::sleep_for(std::chrono::microseconds((*rng_)() % 50));
}

void Comm::record(const CommGroup& group, const char* op) {
  if (tracing_) trace_.push_back({group.id(), op});
}

void Comm::send(RankId dest, int tag, wire::Bytes payload) {
  if (tag < 0) misuse("user tags must be non-negative");
  if (dest == rank_) misuse("send to self");
  send_raw(dest, tag, std::move(payload));
}

wire::Bytes Comm::recv(RankId source, int tag) {
  if (tag < 0) misuse("user tags must be non-negative");
  return recv_raw(source, tag);
}

void Comm::send_raw(RankId dest, int tag, wire::Bytes payload) {
  if (dest.value >= world_.size) misuse("send to rank " + std::to_string(dest.value) + " outside the launch");
  jitter();
  std::lock_guard lock(world_.mu);
  if (world_.aborted) misuse("launch aborted");
  world_.queues[{rank_.value, dest.value, tag}].push_back(std::move(payload));
  world_.cv.notify_all();
}

wire::Bytes Comm::recv_raw(RankId source, int tag) {
  if (source.value >= world_.size) misuse("recv from rank " + std::to_string(source.value) + " outside the launch");
  jitter();
  std::unique_lock lock(world_.mu);
  const auto deadline = std::chrono::steady_clock::now() + world_.opts.deadlock_timeout;
  const auto key = std::make_tuple(source.value, rank_.value, tag);
  for (;;) {
    if (auto it = world_.queues.find(key); it != world_.queues.end() && !it->second.empty()) {
      wire::Bytes out = std::move(it->second.front());
      it->second.pop_front();
      return out;
    }
    if (world_.aborted) misuse("launch aborted");

    // With a global view, "every live rank is waiting" is a certain deadlock.
    auto& slot = world_.waiting[rank_.value];
    slot = key;
    if (world_.all_stuck_locked()) {
      slot.reset();
      auto e = std::make_exception_ptr(
          Error(ErrorKind::CollectiveMisuse, "deadlock: every live rank is blocked in a receive"));
      world_.abort_locked(rank_.value, e);
      std::rethrow_exception(e);
    }
    const auto status = world_.cv.wait_until(lock, deadline);
    slot.reset();
    if (status == std::cv_status::timeout) {
      if (auto it = world_.queues.find(key); it != world_.queues.end() && !it->second.empty()) continue;
      auto e = std::make_exception_ptr(Error(ErrorKind::CollectiveMisuse, "deadlock watchdog timeout in recv"));
      world_.abort_locked(rank_.value, e);
      std::rethrow_exception(e);
    }
  }
}

wire::Bytes Comm::broadcast(const CommGroup& group, RankId root, wire::Bytes payload) {
  record(group, "broadcast");
  if (!group.index_of(root)) misuse("broadcast root is not a group member");
  if (group.size() == 1) return payload;
  const int tag = collective_tag(group);
  if (root == rank_) {
    wire::Writer w(payload.size() + 9);
    w.put(std::uint8_t(Kind::Broadcast)).put(std::uint64_t(root.value)).put_bytes(payload);
    const wire::Bytes framed = std::move(w).take();
    for (auto m : group.members())
      if (m != rank_) send_raw(m, tag, framed);
    return payload;
  }
  wire::Bytes framed = recv_raw(root, tag);
  wire::Reader r(framed);
  const auto kind = r.get<std::uint8_t>();
  const auto sender_root = r.get<std::uint64_t>();
  if (kind != std::uint8_t(Kind::Broadcast) || sender_root != root.value)
    misuse("broadcast matched a different collective or root");
  const auto rest = r.rest();
  return wire::Bytes(rest.begin(), rest.end());
}

wire::Bytes Comm::reduce_raw(const CommGroup& group, ReduceOp op, std::uint8_t scalar_tag, wire::Bytes mine,
                             const Fold& fold) {
  if (group.size() == 1) return mine;
  const int tag = collective_tag(group);
  const RankId leader = group.member(0);

  if (rank_ == leader) {
    wire::Bytes acc = std::move(mine);
    // Sequential fold in ascending member order.
    for (std::size_t i = 1; i < group.size(); ++i) {
      wire::Bytes msg = recv_raw(group.member(i), tag);
      wire::Reader r(msg);
      const auto kind = r.get<std::uint8_t>();
      const auto peer_op = r.get<std::uint8_t>();
      const auto peer_scalar = r.get<std::uint8_t>();
      const auto rest = r.rest();
      if (kind != std::uint8_t(Kind::ReduceIn)) misuse("allreduce matched a different collective");
      if (peer_op != std::uint8_t(op) || peer_scalar != scalar_tag) misuse("allreduce operation mismatch");
      if (rest.size() != acc.size()) misuse("allreduce operand length mismatch");
      fold(acc, rest);
    }
    wire::Writer w(acc.size() + 2);
    w.put(std::uint8_t(Kind::ReduceOut)).put(std::uint8_t(op)).put_bytes(acc);
    const wire::Bytes framed = std::move(w).take();
    for (std::size_t i = 1; i < group.size(); ++i) send_raw(group.member(i), tag, framed);
    return acc;
  }

  wire::Writer w(mine.size() + 3);
  w.put(std::uint8_t(Kind::ReduceIn)).put(std::uint8_t(op)).put(scalar_tag).put_bytes(mine);
  send_raw(leader, tag, std::move(w).take());
  wire::Bytes msg = recv_raw(leader, tag);
  wire::Reader r(msg);
  const auto kind = r.get<std::uint8_t>();
  const auto peer_op = r.get<std::uint8_t>();
  if (kind != std::uint8_t(Kind::ReduceOut) || peer_op != std::uint8_t(op)) misuse("allreduce result mismatch");
  const auto rest = r.rest();
  if (rest.size() != mine.size()) misuse("allreduce operand length mismatch");
  return wire::Bytes(rest.begin(), rest.end());
}

void Comm::barrier(const CommGroup& group) {
  record(group, "barrier");
  if (group.size() == 1) return;
  const int tag = collective_tag(group);
  const RankId leader = group.member(0);
  if (rank_ == leader) {
    for (std::size_t i = 1; i < group.size(); ++i) {
      auto msg = recv_raw(group.member(i), tag);
      if (msg.size() != 1 || msg[0] != std::byte(Kind::BarrierIn)) misuse("barrier matched a different collective");
    }
    for (std::size_t i = 1; i < group.size(); ++i) send_raw(group.member(i), tag, {std::byte(Kind::BarrierOut)});
    return;
  }
  send_raw(leader, tag, {std::byte(Kind::BarrierIn)});
  auto msg = recv_raw(leader, tag);
  if (msg.size() != 1 || msg[0] != std::byte(Kind::BarrierOut)) misuse("barrier matched a different collective");
}

}  // namespace gridsolve
