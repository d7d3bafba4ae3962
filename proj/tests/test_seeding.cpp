#include <doctest.h>

#include <fedmimo/seeding.hpp>

#include <cmath>
#include <set>

using namespace fedmimo;

TEST_CASE("sub_seed separates streams and indices") {
    const std::uint64_t master = 12345;
    std::set<std::uint64_t> seen;
    for (auto stream : {SeedStream::topology, SeedStream::dataset, SeedStream::partition,
                        SeedStream::channel, SeedStream::policy, SeedStream::probe}) {
        for (std::uint64_t idx = 0; idx < 8; ++idx) {
            seen.insert(sub_seed(master, stream, idx));
        }
    }
    CHECK(seen.size() == 48);
    CHECK(sub_seed(master, SeedStream::channel, 3) == sub_seed(master, SeedStream::channel, 3));
    CHECK(sub_seed(master, SeedStream::channel, 3) != sub_seed(master + 1, SeedStream::channel, 3));
}

TEST_CASE("uniform stays in [0,1) and is deterministic") {
    Rng a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
    }
}

TEST_CASE("uniform_index covers the range without bias artifacts") {
    Rng rng(7);
    std::set<std::size_t> hits;
    for (int i = 0; i < 2000; ++i) {
        const std::size_t v = rng.uniform_index(5);
        CHECK(v < 5);
        hits.insert(v);
    }
    CHECK(hits.size() == 5);
}

TEST_CASE("gaussian has sane moments") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}
