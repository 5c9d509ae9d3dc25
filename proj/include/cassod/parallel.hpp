#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cassod {

struct ExecOptions {
  int threads = 1;

  // CASSOD_THREADS caps the worker count; results do not depend on it.
  static ExecOptions from_environment() {
    ExecOptions options;
    if (const char* env = std::getenv("CASSOD_THREADS")) {
      try {
        options.threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        options.threads = 1;
      }
    }
    return options;
  }
};

// Runs fn(index) for index in [0, count). Each index is handled by exactly one
// worker, so per-index results are identical for any thread count.
template <typename Fn>
void parallel_for(int count, const ExecOptions& options, Fn&& fn) {
  const int workers = std::clamp(options.threads, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < count; i += workers) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cassod
