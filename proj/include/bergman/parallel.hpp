#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <future>
#include <thread>
#include <vector>

namespace bergman {

/// Runs body(i) for i in [0,n) on up to `jobs` threads (0 = hardware).
/// Each index is written by exactly one task, so results stored by index are
/// deterministic. The first exception (lowest chunk) is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned jobs = 0) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::future<void>> tasks;
  tasks.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    tasks.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < n; i += jobs) body(i);
    }));
  }
  std::exception_ptr first;
  for (auto& task : tasks) {
    try {
      task.get();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace bergman
