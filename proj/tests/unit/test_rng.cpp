#include <doctest.h>

#include <array>
#include <set>

#include "cellgep/rng.hpp"

using namespace cellgep;

TEST_CASE("same seed gives the same stream")
{
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    Rng c(43);
    CHECK(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("uniform_index stays in range and covers it evenly")
{
    Rng rng(7);
    std::array<int, 6> counts{};
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        const auto k = rng.uniform_index(6);
        REQUIRE(k < 6);
        ++counts[k];
    }
    for (int c : counts) {
        CHECK(c == doctest::Approx(draws / 6.0).epsilon(0.05));
    }
    CHECK(rng.uniform_index(1) == 0);
}

TEST_CASE("uniform_int is inclusive on both ends")
{
    Rng rng(3);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(-2, 2);
        REQUIRE(v >= -2);
        REQUIRE(v <= 2);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("uniform01 lies in [0, 1) and bernoulli respects its extremes")
{
    Rng rng(11);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        REQUIRE_FALSE(rng.bernoulli(0.0));
        REQUIRE(rng.bernoulli(1.0));
    }
    CHECK(sum / 10000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("state round-trips through text")
{
    Rng rng(99);
    for (int i = 0; i < 17; ++i) {
        rng.next_u64();
    }
    Rng copy;
    copy.restore(rng.state());
    CHECK(copy == rng);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(copy.next_u64() == rng.next_u64());
    }
    CHECK_THROWS(copy.restore("not a generator state"));
}

TEST_CASE("fork gives a stream different from the parent")
{
    Rng parent(5);
    Rng child = parent.fork();
    CHECK(child.next_u64() != parent.next_u64());
}
