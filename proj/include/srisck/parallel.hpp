#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace srisck {

//! Worker count from SRISCK_THREADS, else the hardware concurrency.
inline std::size_t default_worker_count() {
  if (const char *env = std::getenv("SRISCK_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1)
        return static_cast<std::size_t>(v);
    } catch (const std::exception &) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

//! Calls fn(i) for i in [begin, end) on up to `workers` threads, each thread
//! taking a contiguous chunk. fn must only write state owned by index i.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, std::size_t workers,
                  Fn &&fn) {
  if (end <= begin)
    return;
  const std::size_t count = end - begin;
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    for (std::size_t i = begin; i < end; ++i)
      fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + count * w / workers;
    const std::size_t hi = begin + count * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i)
          fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool)
    t.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace srisck
