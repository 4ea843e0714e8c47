#ifndef REEBKIT_PARALLEL_HPP
#define REEBKIT_PARALLEL_HPP

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace reebkit {

/// Worker count: REEBKIT_THREADS if set to a positive integer, else the
/// hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("REEBKIT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Split [0, n) into contiguous chunks, evaluate body(begin, end) on each in
/// its own thread and return the per-chunk results in index order, so a
/// caller folding them left to right gets the sequential answer. The first
/// exception thrown by any chunk is rethrown.
template <class Body>
auto parallel_chunks(std::size_t n, Body&& body) {
    using R = std::invoke_result_t<Body&, std::size_t, std::size_t>;
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(thread_count(), n));
    std::vector<R> results(chunks);
    if (chunks == 1) {
        results[0] = body(std::size_t{0}, n);
        return results;
    }
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        workers.emplace_back([&, begin, end, c] {
            try {
                results[c] = body(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

} // namespace reebkit

#endif
