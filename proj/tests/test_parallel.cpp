#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <stdexcept>
#include <vector>

#include "shelab/parallel.hpp"

using namespace shelab;

TEST_CASE("resolve_workers maps zero to the hardware count") {
    CHECK(resolve_workers(1) == 1);
    CHECK(resolve_workers(7) == 7);
    CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("parallel_for visits every index exactly once") {
    const std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    parallel_for(n, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}

TEST_CASE("results written into indexed slots match the serial run") {
    const std::size_t n = 257;
    std::vector<double> serial(n), parallel(n);
    auto body = [](std::size_t i) {
        return static_cast<double>(i * i % 97) / 7.0;
    };
    parallel_for(n, 1, [&](std::size_t i) { serial[i] = body(i); });
    parallel_for(n, 8, [&](std::size_t i) { parallel[i] = body(i); });
    for (std::size_t i = 0; i < n; ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("worker exceptions propagate to the caller") {
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 41)
                                         throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    CHECK_NOTHROW(parallel_for(0, 4, [](std::size_t) {}));
}
