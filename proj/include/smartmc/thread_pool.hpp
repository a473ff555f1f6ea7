#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace smartmc {

// Minimal persistent pool for per-iteration candidate evaluation. Work is
// handed out as index ranges; each index writes to its own slot, so the
// result is independent of how indices are split across workers.
class ThreadPool {
public:
    explicit ThreadPool(int threads) {
        int n = threads > 1 ? threads - 1 : 0; // caller thread also works
        workers_.reserve(n);
        for (int i = 0; i < n; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const { return (int)workers_.size() + 1; }

    // Runs fn(i) for i in [0, count); blocks until all complete.
    void parallel_for(int count, const std::function<void(int)>& fn) {
        if (count <= 0) return;
        if (workers_.empty()) {
            for (int i = 0; i < count; ++i) fn(i);
            return;
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            fn_ = &fn;
            count_ = count;
            next_ = 0;
            pending_ = count;
        }
        cv_.notify_all();
        run_indices(fn);
        std::unique_lock<std::mutex> lock(mu_);
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        fn_ = nullptr;
    }

private:
    void run_indices(const std::function<void(int)>& fn) {
        for (;;) {
            int i;
            {
                std::lock_guard<std::mutex> lock(mu_);
                if (next_ >= count_) return;
                i = next_++;
            }
            fn(i);
            std::lock_guard<std::mutex> lock(mu_);
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }

    void worker_loop() {
        for (;;) {
            const std::function<void(int)>* fn = nullptr;
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_.wait(lock, [this] { return stop_ || (fn_ && next_ < count_); });
                if (stop_) return;
                fn = fn_;
            }
            run_indices(*fn);
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(int)>* fn_ = nullptr;
    int count_ = 0;
    int next_ = 0;
    int pending_ = 0;
    bool stop_ = false;
};

} // namespace smartmc
