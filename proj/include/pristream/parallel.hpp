#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace pri {

/// Evaluates f(0) .. f(n-1) on a pool of worker threads. Results come back in
/// index order, so any fold over them is independent of scheduling. The first
/// exception (by index) is rethrown after all workers finish.
template <typename F>
auto parallel_map(int n, F&& f, int workers = 0) -> std::vector<std::invoke_result_t<F&, int>> {
  using R = std::invoke_result_t<F&, int>;
  std::vector<R> out(static_cast<std::size_t>(std::max(n, 0)));
  if (n <= 0) return out;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);

  std::vector<std::exception_ptr> errors(out.size());
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace pri
