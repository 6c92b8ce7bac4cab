#include "memefuse/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace memefuse {

unsigned worker_count() {
    const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MEMEFUSE_THREADS")) {
        try {
            const long requested = std::stol(env);
            if (requested > 0) {
                return std::min<unsigned>(hardware, static_cast<unsigned>(requested));
            }
        } catch (const std::exception&) {
            // unparsable value: fall through to the default
        }
    }
    return hardware;
}

void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    body(c);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace memefuse
