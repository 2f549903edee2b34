#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <algorithm>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace dumbbell::experiments {

inline constexpr const char* kWorkersEnv = "DUMBBELL_WORKERS";

/// Worker count: explicit flag, else DUMBBELL_WORKERS, else the fallback.
inline int resolve_workers(std::optional<int> flag, int fallback) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv(kWorkersEnv)) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return fallback > 0 ? fallback : 1;
}

/// Runs fn(0..count-1) on up to `workers` threads. Results land in index
/// order; the first exception (lowest index) is rethrown after all finish.
template <typename T>
std::vector<T> parallel_map(int count, int workers, const std::function<T(int)>& fn) {
  std::vector<std::optional<T>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        slots[static_cast<std::size_t>(i)].emplace(fn(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(workers, count));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace dumbbell::experiments
