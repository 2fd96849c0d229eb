#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>

#include "gridsolve/core.hpp"

namespace gridsolve {

enum class Access { In, Out, InOut };

/// A host-resident operand of a staged kernel: a (possibly padded)
/// column-major block of `rows` x `cols` elements of `elem_size` bytes.
struct HostBuffer {
  std::byte* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t lead = 0;
  std::size_t elem_size = 0;
  Access access = Access::In;

  std::size_t bytes() const noexcept { return rows * cols * elem_size; }
  bool copied_in() const noexcept { return access != Access::Out; }
  bool copied_out() const noexcept { return access != Access::In; }

  template <class T>
  static HostBuffer of(MatrixView<T> m, Access access) {
    using V = std::remove_const_t<T>;
    // In-only buffers are never written through.
    auto* p = reinterpret_cast<std::byte*>(const_cast<V*>(m.data()));
    return {p, m.rows(), m.cols(), m.lead() == 0 ? 1 : m.lead(), sizeof(V), access};
  }
  template <class T>
  static HostBuffer of(std::span<T> v, Access access) {
    using V = std::remove_const_t<T>;
    auto* p = reinterpret_cast<std::byte*>(const_cast<V*>(v.data()));
    return {p, v.size(), 1, v.size() == 0 ? 1 : v.size(), sizeof(V), access};
  }
};

/// Where a kernel body finds an operand: base pointer plus leading dimension
/// (in elements) in the backend's memory space.
struct DeviceView {
  std::byte* data = nullptr;
  std::size_t lead = 0;

  template <class T>
  MatrixView<T> as(std::size_t rows, std::size_t cols) const {
    return {reinterpret_cast<T*>(data), rows, cols, lead < rows ? rows : lead};
  }
  template <class T>
  std::span<T> as(std::size_t n) const {
    return {reinterpret_cast<T*>(data), n};
  }
};

struct LaunchLayout {
  std::size_t blocks = 1;
  std::size_t threads_per_block = 1;

  static constexpr std::size_t default_threads = 256;

  /// Smallest layout with `threads` per block covering `elements`.
  static LaunchLayout covering(std::size_t elements, std::size_t threads = default_threads);
  bool covers(std::size_t elements) const noexcept { return blocks * threads_per_block >= elements; }
};

struct TransferLog {
  std::size_t h2d_copies = 0;
  std::size_t h2d_bytes = 0;
  std::size_t d2h_copies = 0;
  std::size_t d2h_bytes = 0;
  std::size_t allocations = 0;
  std::size_t frees = 0;

  bool empty() const noexcept {
    return h2d_copies == 0 && d2h_copies == 0 && allocations == 0 && frees == 0;
  }
  TransferLog& operator+=(const TransferLog& o) noexcept;
  friend bool operator==(const TransferLog&, const TransferLog&) = default;
};

using KernelBody = std::function<void(std::span<const DeviceView>)>;

/// Executes kernels on behalf of the local rank. A backend decides where the
/// operands live while `body` runs.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string_view name() const noexcept = 0;

  /// Runs `body` with one DeviceView per buffer, in order. Returns the
  /// transfers performed for this call.
  virtual TransferLog stage_execute(std::string_view kernel, std::span<const HostBuffer> buffers,
                                    LaunchLayout layout, const KernelBody& body) = 0;
};

/// Runs kernels in place on host memory; never transfers.
class DirectBackend final : public Backend {
 public:
  std::string_view name() const noexcept override { return "direct"; }
  TransferLog stage_execute(std::string_view kernel, std::span<const HostBuffer> buffers, LaunchLayout layout,
                            const KernelBody& body) override;
};

/// Host-simulated offload device. Every call performs the full flow:
/// allocate device buffers, copy inputs host-to-device, launch, copy outputs
/// device-to-host, free. Device buffers are separate packed allocations
/// (lead == rows), so host padding never crosses the boundary.
class StagedBackend final : public Backend {
 public:
  std::string_view name() const noexcept override { return "staged"; }
  TransferLog stage_execute(std::string_view kernel, std::span<const HostBuffer> buffers, LaunchLayout layout,
                            const KernelBody& body) override;

  /// Device allocations currently alive (zero between calls).
  std::size_t live_allocations() const noexcept { return live_; }
  /// Every transfer this backend has performed, including calls that threw.
  const TransferLog& lifetime_log() const noexcept { return lifetime_; }

 private:
  std::size_t live_ = 0;
  TransferLog lifetime_;
};

/// "direct" or "staged"; any other name throws IoError.
std::unique_ptr<Backend> select_backend(std::string_view name);

/// Floating-point operation tally; one multiply-add counts as two.
class FlopCounter {
 public:
  void add(std::uint64_t flops) noexcept { accumulated_ += flops; }
  std::uint64_t value() const noexcept { return accumulated_; }
  void reset() noexcept { accumulated_ = 0; }

 private:
  std::uint64_t accumulated_ = 0;
};

/// Per-rank computation context: the selected backend plus instrumentation.
/// Not shared between ranks.
class Context {
 public:
  Context();
  explicit Context(std::unique_ptr<Backend> backend);
  explicit Context(std::string_view backend_name);

  Backend& backend() noexcept { return *backend_; }
  FlopCounter& flops() noexcept { return flops_; }
  const FlopCounter& flops() const noexcept { return flops_; }
  const TransferLog& transfers() const noexcept { return transfers_; }
  void reset_transfers() noexcept { transfers_ = {}; }

  /// Routes one kernel invocation through the backend and records its log.
  void run(std::string_view kernel, std::span<const HostBuffer> buffers, LaunchLayout layout,
           const KernelBody& body);

 private:
  std::unique_ptr<Backend> backend_;
  FlopCounter flops_;
  TransferLog transfers_;
};

}  // namespace gridsolve
