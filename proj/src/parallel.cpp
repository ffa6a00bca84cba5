#include "smcf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace smcf {

struct Pool::Impl {
  std::vector<std::thread> workers;
  std::mutex mutex;
  std::condition_variable cv_start;
  std::condition_variable cv_done;
  std::uint64_t generation = 0;
  int busy = 0;
  bool shutdown = false;

  const std::function<void(std::int64_t, std::int64_t, std::int64_t)>* body = nullptr;
  std::int64_t n = 0;
  std::int64_t n_chunks = 0;
  std::atomic<std::int64_t> next_chunk{0};
  std::exception_ptr error;

  void drain() {
    std::int64_t c;
    while ((c = next_chunk.fetch_add(1, std::memory_order_relaxed)) < n_chunks) {
      const std::int64_t begin = c * kChunk;
      const std::int64_t end = std::min(n, begin + kChunk);
      try {
        (*body)(begin, end, c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!error) error = std::current_exception();
      }
    }
  }
};

Pool& Pool::instance() {
  static Pool pool;
  return pool;
}

static int default_thread_count() {
  if (const char* env = std::getenv("SMCF_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return std::min(k, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1, std::min<int>(hw == 0 ? 1 : static_cast<int>(hw), 8));
}

Pool::Pool() : impl_(new Impl) {
  const int total = default_thread_count();
  for (int i = 1; i < total; ++i)
    impl_->workers.emplace_back([this] { worker_loop(); });
}

Pool::~Pool() {
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->shutdown = true;
    ++impl_->generation;
  }
  impl_->cv_start.notify_all();
  for (auto& w : impl_->workers) w.join();
}

int Pool::threads() const { return static_cast<int>(impl_->workers.size()) + 1; }

void Pool::set_threads(int total) {
  total = (total <= 0) ? default_thread_count() : std::min(total, 64);
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->shutdown = true;
    ++impl_->generation;
  }
  impl_->cv_start.notify_all();
  for (auto& w : impl_->workers) w.join();
  impl_->workers.clear();
  impl_->shutdown = false;
  for (int i = 1; i < total; ++i)
    impl_->workers.emplace_back([this] { worker_loop(); });
}

void Pool::worker_loop() {
  Impl& s = *impl_;
  std::uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock<std::mutex> lock(s.mutex);
      s.cv_start.wait(lock, [&] { return s.shutdown || s.generation != seen; });
      if (s.shutdown) return;
      seen = s.generation;
      ++s.busy;
    }
    s.drain();
    {
      std::lock_guard<std::mutex> lock(s.mutex);
      --s.busy;
    }
    s.cv_done.notify_one();
  }
}

void Pool::run_chunked(
    std::int64_t n,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  Impl& s = *impl_;
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  if (impl_->workers.empty() || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c)
      body(c * kChunk, std::min(n, (c + 1) * kChunk), c);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(s.mutex);
    s.body = &body;
    s.n = n;
    s.n_chunks = n_chunks;
    s.next_chunk.store(0, std::memory_order_relaxed);
    s.error = nullptr;
    ++s.generation;
  }
  s.cv_start.notify_all();
  s.drain();
  {
    std::unique_lock<std::mutex> lock(s.mutex);
    s.cv_done.wait(lock, [&] { return s.busy == 0; });
    s.body = nullptr;
    if (s.error) {
      std::exception_ptr e = s.error;
      s.error = nullptr;
      lock.unlock();
      std::rethrow_exception(e);
    }
  }
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  Pool::instance().run_chunked(
      n, [&](std::int64_t b, std::int64_t e, std::int64_t) { body(b, e); });
}

double reduce_sum(std::int64_t n,
                  const std::function<double(std::int64_t, std::int64_t)>& partial) {
  if (n <= 0) return 0.0;
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> parts(static_cast<std::size_t>(n_chunks), 0.0);
  Pool::instance().run_chunked(n, [&](std::int64_t b, std::int64_t e, std::int64_t c) {
    parts[static_cast<std::size_t>(c)] = partial(b, e);
  });
  double sum = 0.0;
  for (double p : parts) sum += p;
  return sum;
}

std::pair<double, std::int64_t> reduce_min(
    std::int64_t n,
    const std::function<std::pair<double, std::int64_t>(std::int64_t,
                                                        std::int64_t)>& partial) {
  if (n <= 0) return {0.0, -1};
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::pair<double, std::int64_t>> parts(
      static_cast<std::size_t>(n_chunks), {0.0, -1});
  Pool::instance().run_chunked(n, [&](std::int64_t b, std::int64_t e, std::int64_t c) {
    parts[static_cast<std::size_t>(c)] = partial(b, e);
  });
  std::pair<double, std::int64_t> best = parts.front();
  for (const auto& p : parts)
    if (p.first < best.first || (p.first == best.first && p.second < best.second))
      best = p;
  return best;
}

double reduce_max(std::int64_t n,
                  const std::function<double(std::int64_t, std::int64_t)>& partial) {
  if (n <= 0) return 0.0;
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> parts(static_cast<std::size_t>(n_chunks), 0.0);
  Pool::instance().run_chunked(n, [&](std::int64_t b, std::int64_t e, std::int64_t c) {
    parts[static_cast<std::size_t>(c)] = partial(b, e);
  });
  double best = parts.front();
  for (double p : parts) best = std::max(best, p);
  return best;
}

}  // namespace smcf
