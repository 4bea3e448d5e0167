#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace packdim {

/// Execution policy shared by the numerical kernels. Work items are always
/// computed by the same code path, so serial and parallel runs agree bit for bit.
struct Exec {
  bool parallel = true;
  unsigned threads = 0;  // 0 = hardware concurrency

  static Exec serial() { return Exec{false, 1}; }

  unsigned resolved_threads() const {
    if (!parallel) return 1;
    unsigned n = threads != 0 ? threads : std::thread::hardware_concurrency();
    return std::max(1u, n);
  }
};

/// Runs body(i) for i in [0, count) using static contiguous chunks.
template <class Body>
void parallel_for(std::size_t count, const Exec& exec, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(exec.resolved_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace packdim
