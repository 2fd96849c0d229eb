#include "gridsolve/backend.hpp"

#include <cstring>
#include <string>
#include <vector>

namespace gridsolve {

LaunchLayout LaunchLayout::covering(std::size_t elements, std::size_t threads) {
  if (threads == 0) threads = 1;
  std::size_t blocks = (elements + threads - 1) / threads;
  return {blocks == 0 ? 1 : blocks, threads};
}

TransferLog& TransferLog::operator+=(const TransferLog& o) noexcept {
  h2d_copies += o.h2d_copies;
  h2d_bytes += o.h2d_bytes;
  d2h_copies += o.d2h_copies;
  d2h_bytes += o.d2h_bytes;
  allocations += o.allocations;
  frees += o.frees;
  return *this;
}

namespace {

void validate(std::string_view kernel, std::span<const HostBuffer> buffers, LaunchLayout layout) {
  if (layout.blocks == 0 || layout.threads_per_block == 0)
    throw Error(ErrorKind::DimensionMismatch, std::string(kernel) + ": empty launch layout");
  for (const auto& b : buffers) {
    if (b.lead < b.rows)
      throw Error(ErrorKind::DimensionMismatch, std::string(kernel) + ": buffer lead < rows");
  }
}

}  // namespace

TransferLog DirectBackend::stage_execute(std::string_view kernel, std::span<const HostBuffer> buffers,
                                         LaunchLayout layout, const KernelBody& body) {
  validate(kernel, buffers, layout);
  std::vector<DeviceView> views;
  views.reserve(buffers.size());
  for (const auto& b : buffers) views.push_back({b.data, b.lead});
  body(views);
  return {};
}

TransferLog StagedBackend::stage_execute(std::string_view kernel, std::span<const HostBuffer> buffers,
                                         LaunchLayout layout, const KernelBody& body) {
  // Steps 1-2 (host allocation and initialisation) are the caller's buffers.
  validate(kernel, buffers, layout);

  TransferLog log;
  std::vector<std::unique_ptr<std::byte[]>> device;
  device.reserve(buffers.size());

  // Step 8: memory clean up, on every exit path.
  auto release = [&] {
    for (auto& d : device) {
      d.reset();
      ++log.frees;
      --live_;
    }
    device.clear();
    lifetime_ += log;
  };

  try {
    // Step 3: allocate device memory.
    for (const auto& b : buffers) {
      try {
        device.push_back(std::make_unique_for_overwrite<std::byte[]>(b.bytes() == 0 ? 1 : b.bytes()));
      } catch (const std::bad_alloc&) {
        throw Error(ErrorKind::IoError, std::string(kernel) + ": device allocation failed");
      }
      ++log.allocations;
      ++live_;
    }

    // Step 4: host -> device, packing away the host leading-dimension padding.
    for (std::size_t k = 0; k < buffers.size(); ++k) {
      const auto& b = buffers[k];
      if (!b.copied_in()) continue;
      const std::size_t col_bytes = b.rows * b.elem_size;
      if (col_bytes)
        for (std::size_t j = 0; j < b.cols; ++j)
          std::memcpy(device[k].get() + j * col_bytes, b.data + j * b.lead * b.elem_size, col_bytes);
      ++log.h2d_copies;
      log.h2d_bytes += b.bytes();
    }

    // Steps 5-6: launch. The host simulation runs the body once over the
    // whole index space; the layout only has to be valid.
    std::vector<DeviceView> views;
    views.reserve(buffers.size());
    for (std::size_t k = 0; k < buffers.size(); ++k) views.push_back({device[k].get(), buffers[k].rows});
    body(views);

    // Step 7: device -> host.
    for (std::size_t k = 0; k < buffers.size(); ++k) {
      const auto& b = buffers[k];
      if (!b.copied_out()) continue;
      const std::size_t col_bytes = b.rows * b.elem_size;
      if (col_bytes)
        for (std::size_t j = 0; j < b.cols; ++j)
          std::memcpy(b.data + j * b.lead * b.elem_size, device[k].get() + j * col_bytes, col_bytes);
      ++log.d2h_copies;
      log.d2h_bytes += b.bytes();
    }
  } catch (...) {
    release();
    throw;
  }
  release();
  return log;
}

std::unique_ptr<Backend> select_backend(std::string_view name) {
  if (name == "direct") return std::make_unique<DirectBackend>();
  if (name == "staged") return std::make_unique<StagedBackend>();
  throw Error(ErrorKind::IoError, "unknown backend '" + std::string(name) + "'");
}

Context::Context() : backend_(std::make_unique<DirectBackend>()) {}
Context::Context(std::unique_ptr<Backend> backend) : backend_(std::move(backend)) {}
Context::Context(std::string_view backend_name) : backend_(select_backend(backend_name)) {}

void Context::run(std::string_view kernel, std::span<const HostBuffer> buffers, LaunchLayout layout,
                  const KernelBody& body) {
  transfers_ += backend_->stage_execute(kernel, buffers, layout, body);
}

}  // namespace gridsolve
