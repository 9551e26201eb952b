#pragma once
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace optit {

// Persistent pool for data-parallel loops. Callers are responsible for making
// chunk work write to disjoint locations; reductions happen after the join, so
// results do not depend on scheduling. Every worker participates in every job
// exactly once, and a new job cannot start until all workers checked out of
// the previous one.
class ThreadPool {
 public:
  explicit ThreadPool(int threads) {
    if (threads < 1) threads = 1;
    for (int i = 0; i + 1 < threads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lk(m_);
      stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& t : workers_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(begin, end) over chunks covering [0, n).
  void parallel_for(std::int64_t n,
                    const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    if (workers_.empty() || n == 1) {
      fn(0, n);
      return;
    }
    std::int64_t chunk = n / (4 * size());
    if (chunk < 1) chunk = 1;
    {
      std::unique_lock<std::mutex> lk(m_);
      job_fn_ = &fn;
      job_n_ = n;
      job_chunk_ = chunk;
      job_next_.store(0, std::memory_order_relaxed);
      done_count_ = 0;
      ++generation_;
    }
    cv_work_.notify_all();
    run_chunks(fn, n, chunk);
    std::unique_lock<std::mutex> lk(m_);
    cv_done_.wait(lk, [this] {
      return done_count_ == static_cast<int>(workers_.size());
    });
    job_fn_ = nullptr;
  }

 private:
  void run_chunks(const std::function<void(std::int64_t, std::int64_t)>& fn,
                  std::int64_t n, std::int64_t chunk) {
    for (;;) {
      std::int64_t begin = job_next_.fetch_add(chunk, std::memory_order_relaxed);
      if (begin >= n) return;
      std::int64_t end = begin + chunk < n ? begin + chunk : n;
      fn(begin, end);
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;
      std::int64_t n = 0, chunk = 0;
      {
        std::unique_lock<std::mutex> lk(m_);
        cv_work_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        fn = job_fn_;
        n = job_n_;
        chunk = job_chunk_;
      }
      if (fn != nullptr) run_chunks(*fn, n, chunk);
      std::unique_lock<std::mutex> lk(m_);
      ++done_count_;
      cv_done_.notify_all();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex m_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(std::int64_t, std::int64_t)>* job_fn_ = nullptr;
  std::int64_t job_n_ = 0, job_chunk_ = 0;
  std::atomic<std::int64_t> job_next_{0};
  int done_count_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace optit
