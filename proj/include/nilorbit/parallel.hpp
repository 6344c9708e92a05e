#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nilorbit {

/// Worker count used when callers pass 0.
inline unsigned default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

/// out[i] = f(i) for i in [0, n), computed on up to `threads` workers.
/// Results are stored by index, so the output does not depend on the
/// schedule. The first exception (lowest index) is rethrown.
template <typename F>
auto parallel_map(std::size_t n, F&& f, unsigned threads = 0) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(n);
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace nilorbit
