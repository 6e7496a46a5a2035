#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "cfair/error.hpp"

namespace cfair {

/// Runs `fn(i)` for i in [0, n) on at most `max_in_flight` threads. Results are
/// stored by index, so output order never depends on completion order. The
/// first exception thrown by any task is rethrown after all workers join.
template <typename Fn>
auto parallel_map(std::size_t n, std::size_t max_in_flight, Fn &&fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    const auto workers = std::max<std::size_t>(1, std::min(max_in_flight, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto &t : pool) t.join();
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{200};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{5000};
};

/// Retries `fn` on TransportError with exponential backoff. Only use for idempotent requests.
template <typename Fn>
auto with_retries(const RetryPolicy &policy, Fn &&fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError &e) {
            if (attempt >= policy.max_attempts) {
                throw TransportError(e.message() + " after " + std::to_string(attempt) + " attempts",
                                     e.request_id());
            }
        }
        std::this_thread::sleep_for(backoff);
        backoff = std::min(policy.max_backoff, std::chrono::milliseconds(static_cast<long long>(
                                                   static_cast<double>(backoff.count()) * policy.multiplier)));
    }
}

}  // namespace cfair
