#include <doctest.h>

#include <atomic>
#include <chrono>
#include <string>

#include "gridsolve/transport.hpp"
#include "transport_stress.hpp"

using namespace gridsolve;

namespace {

wire::Bytes text(const std::string& s) {
  wire::Bytes b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) b[i] = std::byte(s[i]);
  return b;
}

std::string as_text(const wire::Bytes& b) {
  std::string s(b.size(), '\0');
  for (std::size_t i = 0; i < b.size(); ++i) s[i] = char(b[i]);
  return s;
}

LaunchOptions quick_timeout() {
  LaunchOptions o;
  o.deadlock_timeout = std::chrono::milliseconds(500);
  return o;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("launch returns per-rank results in rank order") {
  CHECK(launch(1, [](Comm& c) { return c.rank().value; }) == std::vector<std::size_t>{0});
  CHECK(launch(4, [](Comm& c) { return c.rank().value; }) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(kind_of([] { launch(0, [](Comm&) { return 0; }); }) == ErrorKind::CollectiveMisuse);
}

TEST_CASE("point-to-point delivery, FIFO and tag matching") {
  auto res = launch(2, [](Comm& c) -> std::string {
    if (c.rank().value == 0) {
      c.send(RankId{1}, 0, text("hi"));
      c.send(RankId{1}, 5, text("first"));
      c.send(RankId{1}, 5, text("second"));
      c.send(RankId{1}, 9, text("nine"));
      return {};
    }
    std::string s = as_text(c.recv(RankId{0}, 0));
    // Tag 9 is taken ahead of the earlier tag-5 messages.
    s += "|" + as_text(c.recv(RankId{0}, 9));
    s += "|" + as_text(c.recv(RankId{0}, 5));
    s += "|" + as_text(c.recv(RankId{0}, 5));
    return s;
  });
  CHECK(res[1] == "hi|nine|first|second");
}

TEST_CASE("send to self or with a negative tag is misuse") {
  CHECK(kind_of([] { launch(2, [](Comm& c) { c.send(c.rank(), 0, {}); }); }) == ErrorKind::CollectiveMisuse);
  CHECK(kind_of([] { launch(2, [](Comm& c) { c.send(RankId{1 - c.rank().value}, -1, {}); }); }) ==
        ErrorKind::CollectiveMisuse);
}

TEST_CASE("recv with no sender is detected instead of hanging") {
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(kind_of([] {
          launch(
              2, [](Comm& c) { (void)c.recv(RankId{1 - c.rank().value}, 3); }, quick_timeout());
        }) == ErrorKind::CollectiveMisuse);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(20));
}

TEST_CASE("a rank that waits forever while the others finish hits the watchdog") {
  LaunchOptions o;
  o.deadlock_timeout = std::chrono::milliseconds(200);
  CHECK(kind_of([&] {
          launch(
              3,
              [](Comm& c) {
                if (c.rank().value == 2) (void)c.recv(RankId{0}, 1);
              },
              o);
        }) == ErrorKind::CollectiveMisuse);
}

TEST_CASE("broadcast") {
  auto res = launch(4, [](Comm& c) {
    const auto world = c.world();
    const auto solo = c.group({c.rank()});
    std::string own = as_text(c.broadcast(solo, c.rank(), text(std::to_string(c.rank().value))));
    auto a = c.broadcast(world, RankId{2}, c.rank().value == 2 ? wire::Bytes{std::byte{9}} : wire::Bytes{});
    auto b = c.broadcast(world, RankId{1}, c.rank().value == 1 ? wire::Bytes{std::byte{4}} : wire::Bytes{});
    return own + ":" + std::to_string(int(a.at(0))) + ":" + std::to_string(int(b.at(0)));
  });
  CHECK(res == std::vector<std::string>{"0:9:4", "1:9:4", "2:9:4", "3:9:4"});
}

TEST_CASE("broadcast with mismatched roots is misuse") {
  CHECK(kind_of([] {
          launch(
              2, [](Comm& c) { c.broadcast(c.world(), c.rank(), text("x")); }, quick_timeout());
        }) == ErrorKind::CollectiveMisuse);
}

TEST_CASE("allreduce Sum, Max and MaxAbsLoc") {
  auto sums = launch(4, [](Comm& c) { return c.allreduce(c.world(), ReduceOp::Sum, double(c.rank().value)); });
  CHECK(sums == std::vector<double>(4, 6.0));
  auto maxes = launch(3, [](Comm& c) { return c.allreduce(c.world(), ReduceOp::Max, float(c.rank().value) - 5.f); });
  CHECK(maxes == std::vector<float>(3, -3.f));

  auto loc = launch(3, [](Comm& c) {
    const double v[] = {3, 9, 1};
    const std::uint64_t idx[] = {10, 11, 12};
    const auto r = c.rank().value;
    return c.allreduce(c.world(), ReduceOp::MaxAbsLoc, ValueLoc<double>{v[r], idx[r]});
  });
  for (const auto& l : loc) CHECK(l == ValueLoc<double>{9, 11});

  auto tie = launch(2, [](Comm& c) {
    const auto r = c.rank().value;
    // The larger index arrives first in member order; the tie still goes to index 0.
    return c.allreduce(c.world(), ReduceOp::MaxAbsLoc, ValueLoc<double>{r == 0 ? 5.0 : -5.0, r == 0 ? 1u : 0u});
  });
  for (const auto& l : tie) CHECK(l == ValueLoc<double>{-5, 0});
}

TEST_CASE("allreduce vector operand is elementwise") {
  auto res = launch(3, [](Comm& c) {
    std::vector<double> v{double(c.rank().value), 1.0};
    c.allreduce<double>(c.world(), ReduceOp::Sum, v);
    return v;
  });
  for (const auto& v : res) CHECK(v == std::vector<double>{3, 3});
}

TEST_CASE("allreduce op mismatch is misuse") {
  CHECK(kind_of([] {
          launch(
              2,
              [](Comm& c) {
                c.allreduce(c.world(), c.rank().value == 0 ? ReduceOp::Sum : ReduceOp::Max, 1.0);
              },
              quick_timeout());
        }) == ErrorKind::CollectiveMisuse);
  CHECK(kind_of([] {
          launch(
              2,
              [](Comm& c) {
                if (c.rank().value == 0) c.allreduce(c.world(), ReduceOp::Sum, 1.0);
                else c.allreduce(c.world(), ReduceOp::Sum, 1.0f);
              },
              quick_timeout());
        }) == ErrorKind::CollectiveMisuse);
  CHECK(kind_of([] { launch(1, [](Comm& c) { c.allreduce(c.world(), ReduceOp::MaxAbsLoc, 1.0); }); }) ==
        ErrorKind::CollectiveMisuse);
}

TEST_CASE("a rank skipping a collective is detected") {
  CHECK(kind_of([] {
          launch(
              3,
              [](Comm& c) {
                if (c.rank().value != 1) c.barrier(c.world());
              },
              quick_timeout());
        }) == ErrorKind::CollectiveMisuse);
}

TEST_CASE("barrier orders every entry before every exit") {
  std::atomic<int> entered{0};
  auto ok = launch(4, [&](Comm& c) {
    ++entered;
    c.barrier(c.world());
    return entered.load() == 4;
  });
  for (bool b : ok) CHECK(b);
  CHECK(launch(1, [](Comm& c) {
          c.barrier(c.world());
          return 1;
        }) == std::vector<int>{1});
}

TEST_CASE("nested row and column barriers on a 2x3 mesh") {
  LaunchOptions o;
  o.jitter_seed = 17;
  auto done = launch(
      6,
      [](Comm& c) {
        const std::size_t r = c.rank().value, row = r / 3, col = r % 3;
        const auto rows = c.group({RankId{row * 3}, RankId{row * 3 + 1}, RankId{row * 3 + 2}});
        const auto cols = c.group({RankId{col}, RankId{3 + col}});
        for (int i = 0; i < 50; ++i) {
          c.barrier(rows);
          c.barrier(cols);
        }
        return true;
      },
      o);
  CHECK(done.size() == 6);
}

TEST_CASE("a library error in one rank keeps its kind") {
  try {
    launch(
        3,
        [](Comm& c) {
          if (c.rank().value == 1) throw Error(ErrorKind::NotSpd, "pivot 4 is -1");
          c.barrier(c.world());
        },
        quick_timeout());
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSpd);
    CHECK(std::string(e.what()).find("rank 1") != std::string::npos);
  }
  CHECK(kind_of([] { launch(2, [](Comm&) { throw std::runtime_error("boom"); }); }) == ErrorKind::CollectiveMisuse);
}

TEST_CASE("trace records collectives in call order") {
  LaunchOptions o;
  o.trace = true;
  auto traces = launch(
      2,
      [](Comm& c) {
        const auto w = c.world();
        c.barrier(w);
        c.allreduce(w, ReduceOp::Sum, 1.0);
        c.broadcast(w, RankId{0}, {});
        return c.trace();
      },
      o);
  CHECK(traces[0] == traces[1]);
  REQUIRE(traces[0].size() == 3);
  CHECK(traces[0][0].op == "barrier");
  CHECK(traces[0][1].op == "allreduce:sum");
  CHECK(traces[0][2].op == "broadcast");
}

TEST_CASE("randomized schedule stress is reproducible and delivers correctly") {
  const auto a = stress::run(8, 200, 1);
  const auto b = stress::run(8, 200, 2);
  CHECK(a.misdelivered == 0);
  CHECK(b.misdelivered == 0);
  for (std::size_t r = 1; r < 8; ++r) CHECK(a.sums[r] == a.sums[0]);
  // Different schedules, identical bits.
  CHECK(a.sums == b.sums);
}
