#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace handtrack {

// Fixed-size worker pool whose only operation is a blocking parallel_for.
// With one thread the loop runs inline on the caller.
class ThreadPool {
public:
    explicit ThreadPool(int threads = 1) : threads_(std::max(1, threads)) {
        for (int i = 1; i < threads_; ++i) workers_.emplace_back([this] { worker_loop(); });
    }
    ~ThreadPool() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        for (auto& w : workers_) w.join();
    }
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int threads() const noexcept { return threads_; }

    void parallel_for(int n, const std::function<void(int)>& fn) {
        if (n <= 0) return;
        if (threads_ == 1 || n == 1) {
            for (int i = 0; i < n; ++i) fn(i);
            return;
        }
        {
            std::lock_guard lock(mutex_);
            job_ = &fn;
            job_size_ = n;
            next_.store(0);
            pending_workers_ = static_cast<int>(workers_.size());
            error_ = nullptr;
            ++epoch_;
        }
        wake_.notify_all();
        run_chunks();
        std::unique_lock lock(mutex_);
        done_.wait(lock, [this] { return pending_workers_ == 0; });
        job_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void run_chunks() {
        while (true) {
            const int i = next_.fetch_add(1);
            if (i >= job_size_) return;
            try {
                (*job_)(i);
            } catch (...) {
                std::lock_guard lock(mutex_);
                if (!error_) error_ = std::current_exception();
            }
        }
    }

    void worker_loop() {
        std::size_t seen = 0;
        while (true) {
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stopping_ || epoch_ != seen; });
                if (stopping_) return;
                seen = epoch_;
            }
            run_chunks();
            {
                std::lock_guard lock(mutex_);
                --pending_workers_;
            }
            done_.notify_one();
        }
    }

    int threads_;
    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(int)>* job_ = nullptr;
    int job_size_ = 0;
    std::atomic<int> next_{0};
    int pending_workers_ = 0;
    std::size_t epoch_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

}  // namespace handtrack
