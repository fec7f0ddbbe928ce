#include "core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace mamsr {

namespace {

thread_local bool t_inside_pool = false;

int resolve_worker_count() {
    int n = int(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("MAMSR_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1 && v < 1024) n = int(v);
    }
    return n;
}

struct Job {
    std::function<void(std::int64_t)> body;
    std::atomic<std::int64_t> cursor{0};
    std::int64_t total = 0;
    std::atomic<std::int64_t> remaining{0};
};

// Persistent pool. One job at a time; workers pull chunk indices from the
// job's atomic cursor, so each chunk body runs sequentially on one thread.
class Pool {
public:
    static Pool& instance() {
        static Pool pool(resolve_worker_count());
        return pool;
    }

    int workers() const { return nworkers_; }

    void run(std::int64_t nchunks, const std::function<void(std::int64_t)>& chunk_body) {
        if (nchunks <= 0) return;
        if (nworkers_ == 1 || nchunks == 1 || t_inside_pool) {
            for (std::int64_t i = 0; i < nchunks; ++i) chunk_body(i);
            return;
        }
        std::lock_guard<std::mutex> serial(job_mutex_);
        auto job = std::make_shared<Job>();
        job->body = chunk_body;
        job->total = nchunks;
        job->remaining.store(nchunks, std::memory_order_relaxed);
        {
            std::lock_guard<std::mutex> g(mutex_);
            current_ = job;
        }
        cv_.notify_all();
        t_inside_pool = true; // nested parallel_for from a chunk body runs inline
        participate(*job);
        t_inside_pool = false;
        {
            std::unique_lock<std::mutex> g(mutex_);
            done_cv_.wait(g, [&] { return job->remaining.load(std::memory_order_acquire) == 0; });
            current_.reset();
        }
    }

private:
    explicit Pool(int n) : nworkers_(n) {
        for (int i = 0; i < n - 1; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> g(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void worker_loop() {
        t_inside_pool = true;
        std::shared_ptr<Job> last;
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock<std::mutex> g(mutex_);
                cv_.wait(g, [&] { return stop_ || (current_ && current_ != last); });
                if (stop_) return;
                job = current_;
            }
            last = job;
            participate(*job);
        }
    }

    void participate(Job& job) {
        std::int64_t done = 0;
        for (;;) {
            std::int64_t i = job.cursor.fetch_add(1, std::memory_order_relaxed);
            if (i >= job.total) break;
            job.body(i);
            ++done;
        }
        if (done > 0) {
            if (job.remaining.fetch_sub(done, std::memory_order_acq_rel) == done) {
                std::lock_guard<std::mutex> g(mutex_);
                done_cv_.notify_all();
            }
        }
    }

    int nworkers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::mutex job_mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::shared_ptr<Job> current_;
    bool stop_ = false;
};

} // namespace

int worker_count() { return Pool::instance().workers(); }

void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (count <= 0) return;
    const int nw = worker_count();
    if (nw == 1 || count == 1) {
        body(0, count);
        return;
    }
    std::int64_t nchunks = std::min<std::int64_t>(count, std::int64_t(nw) * 4);
    std::int64_t chunk = (count + nchunks - 1) / nchunks;
    nchunks = (count + chunk - 1) / chunk;
    Pool::instance().run(nchunks, [&](std::int64_t ci) {
        std::int64_t b = ci * chunk;
        std::int64_t e = std::min(count, b + chunk);
        if (b < e) body(b, e);
    });
}

} // namespace mamsr
