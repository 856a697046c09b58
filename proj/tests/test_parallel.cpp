#include <doctest.h>

#include <atomic>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "glab/parallel.hpp"

TEST_CASE("pairwise_sum matches exact small sums") {
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(glab::pairwise_sum(v) == 500500.0);
    CHECK(glab::pairwise_sum(std::span<const double>{}) == 0.0);
}

TEST_CASE("sample_moments is exact for constant samples") {
    std::vector<double> v(777, 0.1);
    const auto m = glab::sample_moments(v);
    CHECK(m.mean == 0.1);
    CHECK(m.std_error == 0.0);
}

TEST_CASE("sample_moments standard error") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto m = glab::sample_moments(v);
    CHECK(m.mean == doctest::Approx(2.5));
    // sample variance 5/3, divided by n
    CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("parallel_for visits every index once for any thread count") {
    for (unsigned threads : {1u, 2u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(1001);
        glab::parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
}

TEST_CASE("parallel_for rethrows worker exceptions") {
    CHECK_THROWS_AS(glab::parallel_for(100, 4,
                                       [](std::size_t i) {
                                           if (i == 57) throw std::runtime_error("boom");
                                       }),
                    std::runtime_error);
}
