#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lagspec {

/// Worker cap: LAGSPEC_THREADS if set (>=1), else hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("LAGSPEC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

/// Runs body(i) for i in [0, n). Work items must be independent; results keyed
/// by index stay deterministic regardless of the worker count.
template <typename Body>
void parallel_for(long n, const Body& body, int threads = -1) {
  if (threads < 1) threads = max_threads();
  if (threads == 1 || n <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto run = [&] {
    long i;
    while ((i = next.fetch_add(1)) < n) {
      if (failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  const int nw = static_cast<int>(std::min<long>(threads, n));
  pool.reserve(nw);
  for (int t = 0; t < nw; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace lagspec
