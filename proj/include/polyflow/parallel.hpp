#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace polyflow {

/// Worker cap from POLYFLOW_THREADS: unset means 1, 0 means hardware concurrency.
inline unsigned worker_count() {
  static const unsigned count = [] {
    const char* env = std::getenv("POLYFLOW_THREADS");
    if (env == nullptr || *env == '\0') return 1u;
    long v = 1;
    try {
      v = std::stol(env);
    } catch (...) {
      return 1u;
    }
    if (v <= 0) return std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(v);
  }();
  return count;
}

/// Runs fn(i) for i in [0, count). Each index must write only its own output,
/// so the result does not depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  constexpr std::size_t kMinChunk = 4096;
  const unsigned workers = worker_count();
  if (workers <= 1 || count < 2 * kMinChunk) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, count / kMinChunk);
  const std::size_t per = (count + chunks - 1) / chunks;
  std::vector<std::jthread> pool;
  pool.reserve(chunks - 1);
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t lo = c * per;
    const std::size_t hi = std::min(count, lo + per);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::size_t i = 0; i < std::min(count, per); ++i) fn(i);
}

/// Neumaier-compensated sum; reductions are always sequential.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace polyflow
