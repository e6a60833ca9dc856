#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nerfdyn {

// Persistent worker pool. Work is always split into one contiguous chunk per
// worker so that per-chunk results can be reduced in a fixed order; with the
// same thread count, results are reproducible run to run. threads() == 1 runs
// everything inline (the strict single-threaded reproducibility mode).
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads = 0) { set_threads(n_threads > 0 ? n_threads : hardware_threads()); }
  ~ThreadPool() { stop(); }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  static int hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
  }

  static ThreadPool& global();

  int threads() const { return n_threads_; }

  void set_threads(int n) {
    if (n < 1) n = 1;
    if (n == n_threads_ && (n == 1 || !workers_.empty())) return;
    stop();
    n_threads_ = n;
    if (n_threads_ > 1) start();
  }

  // fn(chunk_index, begin, end) over [0, n). Blocks until all chunks finish.
  // Exceptions from chunks are rethrown on the calling thread.
  void parallel_chunks(std::int64_t n, const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
    int k = n_threads_;
    if (k == 1 || n <= 1) {
      fn(0, 0, n);
      return;
    }
    if (static_cast<std::int64_t>(k) > n) k = static_cast<int>(n);
    {
      std::unique_lock<std::mutex> lock(mu_);
      job_ = &fn;
      job_chunks_ = k;
      job_n_ = n;
      next_chunk_ = 0;
      pending_ = k;
      error_ = nullptr;
      ++generation_;
    }
    cv_work_.notify_all();
    // The calling thread participates as well.
    run_chunks();
    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [&] { return pending_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void start() {
    stopping_ = false;
    for (int i = 0; i < n_threads_ - 1; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  void stop() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stopping_ = true;
      ++generation_;
    }
    cv_work_.notify_all();
    for (auto& t : workers_) t.join();
    workers_.clear();
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_work_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        seen = generation_;
        if (stopping_) return;
        if (job_ == nullptr) continue;
      }
      run_chunks();
    }
  }

  void run_chunks() {
    for (;;) {
      int c;
      const std::function<void(int, std::int64_t, std::int64_t)>* job;
      std::int64_t n;
      int k;
      {
        std::unique_lock<std::mutex> lock(mu_);
        if (job_ == nullptr || next_chunk_ >= job_chunks_) return;
        c = next_chunk_++;
        job = job_;
        n = job_n_;
        k = job_chunks_;
      }
      std::int64_t begin = n * c / k;
      std::int64_t end = n * (c + 1) / k;
      try {
        (*job)(c, begin, end);
      } catch (...) {
        std::unique_lock<std::mutex> lock(mu_);
        if (!error_) error_ = std::current_exception();
      }
      std::unique_lock<std::mutex> lock(mu_);
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }

  int n_threads_ = 1;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(int, std::int64_t, std::int64_t)>* job_ = nullptr;
  int job_chunks_ = 0;
  std::int64_t job_n_ = 0;
  int next_chunk_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

}  // namespace nerfdyn
