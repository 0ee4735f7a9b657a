#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "rrw/rng.hpp"

namespace rrw {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i, rng_i) for i in [0, n) with rng_i = make_stream(seed, i).
// Results are stored by index, so they do not depend on the thread count.
template <class R, class F>
std::vector<R> run_replicas(std::int64_t n, std::uint64_t seed, unsigned threads, F&& fn) {
  std::vector<R> out(static_cast<std::size_t>(n));
  const unsigned t = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::int64_t>(1, n)));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    try {
      for (std::int64_t i; (i = next.fetch_add(1)) < n;) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = fn(i, rng);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!err) err = std::current_exception();
      next = n;
    }
  };
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace rrw
