#ifndef RKSS_PARALLEL_HPP
#define RKSS_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace rkss {

// Global worker count for the library (1 = serial).  Results never depend on
// this value: work items write into preassigned slots and all reductions run
// sequentially over those slots afterwards.
inline int& thread_count()
{
  static int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

inline void set_thread_count(int n) { thread_count() = std::max(1, n); }

// Runs body(i) for i in [0, n); each index is processed exactly once.
template <typename Body>
void parallel_for(std::size_t n, Body&& body)
{
  int workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  for (auto& t : pool) t.join();
}

// Deterministic sum: fills slot[i] = term(i) in parallel, then reduces the
// slots in index order on the calling thread.
template <typename Term>
double parallel_sum(std::size_t n, Term&& term)
{
  std::vector<double> slot(n, 0.0);
  parallel_for(n, [&](std::size_t i) { slot[i] = term(i); });
  double s = 0.0;
  for (double v : slot) s += v;
  return s;
}

// Deterministic max over slots.
template <typename Term>
double parallel_max(std::size_t n, Term&& term)
{
  std::vector<double> slot(n, 0.0);
  parallel_for(n, [&](std::size_t i) { slot[i] = term(i); });
  double m = 0.0;
  for (double v : slot) m = std::max(m, v);
  return m;
}

} // namespace rkss

#endif // RKSS_PARALLEL_HPP
