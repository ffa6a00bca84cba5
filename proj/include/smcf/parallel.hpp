#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>

namespace smcf {

/// Work is split into fixed-size chunks so that reduction order, and therefore
/// every floating-point result, is independent of the worker count.
inline constexpr std::int64_t kChunk = 2048;

/// Persistent worker pool. Sized once from SMCF_THREADS (default: hardware
/// concurrency capped at 8); set_threads exists for determinism tests.
class Pool {
 public:
  static Pool& instance();

  int threads() const;
  /// Resize the pool; n <= 0 restores the environment-derived default.
  void set_threads(int n);

  /// Runs body(begin, end, chunk_index) over [0, n) in chunks of kChunk.
  /// Chunk assignment to workers is dynamic; bodies must write disjoint state.
  void run_chunked(std::int64_t n,
                   const std::function<void(std::int64_t, std::int64_t,
                                            std::int64_t)>& body);

  ~Pool();

 private:
  Pool();
  void worker_loop();
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Element-wise map over [0, n).
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

/// Deterministic sum: per-chunk partials combined in chunk order.
double reduce_sum(std::int64_t n,
                  const std::function<double(std::int64_t, std::int64_t)>& partial);

/// Deterministic min with payload index (lexicographic combine in chunk order).
std::pair<double, std::int64_t> reduce_min(
    std::int64_t n,
    const std::function<std::pair<double, std::int64_t>(std::int64_t,
                                                        std::int64_t)>& partial);

/// Deterministic max over chunks.
double reduce_max(std::int64_t n,
                  const std::function<double(std::int64_t, std::int64_t)>& partial);

}  // namespace smcf
