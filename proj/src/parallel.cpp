#include "qsdlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qsdlab::parallel {

namespace {

thread_local bool t_inside_worker = false;

class Pool {
 public:
  explicit Pool(std::size_t n) {
    for (std::size_t i = 0; i + 1 < n; ++i) threads_.emplace_back([this] { loop(); });
  }

  ~Pool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const { return threads_.size() + 1; }

  void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    {
      std::lock_guard lock(mu_);
      job_ = &fn;
      errors_ = &errors;
      total_ = n;
      next_.store(0);
      pending_ = threads_.size();
      ++generation_;
    }
    wake_.notify_all();
    work();
    {
      std::unique_lock lock(mu_);
      done_.wait(lock, [this] { return pending_ == 0; });
      job_ = nullptr;
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  void work() {
    const bool was_inside = t_inside_worker;
    t_inside_worker = true;
    for (std::size_t i = next_.fetch_add(1); i < total_; i = next_.fetch_add(1)) {
      try {
        (*job_)(i);
      } catch (...) {
        (*errors_)[i] = std::current_exception();
      }
    }
    t_inside_worker = was_inside;
  }

  void loop() {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mu_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      work();
      {
        std::lock_guard lock(mu_);
        --pending_;
      }
      done_.notify_one();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::vector<std::exception_ptr>* errors_ = nullptr;
  std::size_t total_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

std::mutex g_pool_mu;
std::unique_ptr<Pool> g_pool;
std::size_t g_requested = 0;

}  // namespace

std::size_t default_worker_count() {
  if (const char* env = std::getenv("QSDLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t worker_count() {
  std::lock_guard lock(g_pool_mu);
  return g_requested ? g_requested : default_worker_count();
}

void set_worker_count(std::size_t n) {
  std::lock_guard lock(g_pool_mu);
  g_requested = n;
  g_pool.reset();
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::unique_lock lock(g_pool_mu, std::defer_lock);
  const std::size_t workers = t_inside_worker ? 1 : worker_count();
  if (workers <= 1 || n == 1) {
    std::exception_ptr first;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
    return;
  }
  // One batch at a time; concurrent callers from outside the pool queue here.
  lock.lock();
  if (!g_pool || g_pool->size() != workers) g_pool = std::make_unique<Pool>(workers);
  g_pool->run(n, fn);
}

}  // namespace qsdlab::parallel
