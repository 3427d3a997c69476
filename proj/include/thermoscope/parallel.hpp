#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace thermoscope {

/// Runs independent tasks on a fixed number of threads. Results come back
/// indexed by task, so any reduction the caller does in index order is
/// bit-identical for every thread count.
class Executor {
public:
    explicit Executor(unsigned threads = 1) : threads_(std::max(1u, threads)) {}

    unsigned threads() const { return threads_; }

    template <class R, class F>
    std::vector<R> map(std::size_t count, F&& task) const
    {
        std::vector<R> out(count);
        const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads_, count));
        if (workers <= 1) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = task(i);
            return out;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto body = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    out[i] = task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(body);
        for (auto& t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
        return out;
    }

private:
    unsigned threads_;
};

/// SplitMix64 step; used to derive per-shard seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x)
    {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void add(const CompensatedSum& other)
    {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Streaming log(sum(exp(x_i))) with a running shift.
class LogSumExp {
public:
    void add(double log_term)
    {
        if (log_term == -std::numeric_limits<double>::infinity())
            return;
        if (log_term > shift_) {
            if (shift_ != -std::numeric_limits<double>::infinity())
                scaled_ = scaled_ * std::exp(shift_ - log_term);
            shift_ = log_term;
        }
        scaled_.add(std::exp(log_term - shift_));
    }
    void add(const LogSumExp& other)
    {
        if (other.shift_ == -std::numeric_limits<double>::infinity())
            return;
        add(other.shift_ + std::log(other.scaled_.value()));
    }
    double value() const
    {
        if (shift_ == -std::numeric_limits<double>::infinity())
            return shift_;
        return shift_ + std::log(scaled_.value());
    }

private:
    struct Scaled {
        CompensatedSum sum;
        void add(double x) { sum.add(x); }
        double value() const { return sum.value(); }
        Scaled operator*(double f) const
        {
            Scaled s;
            s.sum.add(sum.value() * f);
            return s;
        }
    };
    double shift_ = -std::numeric_limits<double>::infinity();
    Scaled scaled_;
};

} // namespace thermoscope
