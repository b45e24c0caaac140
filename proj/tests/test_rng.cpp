#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "recmfg/rng.hpp"
#include "recmfg/stats.hpp"

using namespace recmfg;

TEST_CASE("philox4x64-10 known-answer vectors") {
    // Reference outputs from numpy.random.Philox raw streams (numpy advances
    // its counter before the first block, so these counters are the advanced
    // ones).
    auto out = Philox4x64::block({1, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x02f4ba6408e4d89bULL);
    CHECK(out[1] == 0x3dd62b0b9ca8c5b2ULL);
    CHECK(out[2] == 0x1c8667a55d902e79ULL);
    CHECK(out[3] == 0x907d7a052fd5b4dcULL);

    out = Philox4x64::block({2, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x809bf322883987c3ULL);
    CHECK(out[1] == 0x471128b9e807f7ddULL);
    CHECK(out[2] == 0xf250ba0dbec065b7ULL);
    CHECK(out[3] == 0xfc6ed66767a457bcULL);

    out = Philox4x64::block({2, 2, 3, 4}, {0xdeadbeef12345678ULL, 0x0f0e0d0c0b0a0908ULL});
    CHECK(out[0] == 0x05d7ca0c60135419ULL);
    CHECK(out[1] == 0x6c28806204212aa7ULL);
    CHECK(out[2] == 0x187ee25b026bcf12ULL);
    CHECK(out[3] == 0x42e71cff585035edULL);

    out = Philox4x64::block({0, 1, 0, 0}, {1, 0});
    CHECK(out[0] == 0xbbf738c62d3516b3ULL);
    CHECK(out[1] == 0x7faed3926853226bULL);
    CHECK(out[2] == 0xc175b4809d5da923ULL);
    CHECK(out[3] == 0x7a77f6c341cec732ULL);
}

TEST_CASE("draws are pure functions of (seed, stream, index)") {
    const double a = rng_normal(42, 7, 1234);
    const double b = rng_normal(42, 7, 1234);
    CHECK(a == b);
    CHECK(rng_normal(42, 7, 1235) != a);
    CHECK(rng_normal(43, 7, 1234) != a);
    CHECK(rng_normal(42, 8, 1234) != a);
}

TEST_CASE("uniforms live strictly inside (0,1)") {
    for (std::uint64_t i = 0; i < 4096; ++i) {
        const double u = rng_uniform(1, 2, i);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("normal stream has unit-variance statistics") {
    std::vector<double> zs;
    zs.reserve(200000);
    for (std::uint64_t i = 0; i < 200000; ++i) zs.push_back(rng_normal(9, 1, i));
    const auto s = sample_stats(zs);
    CHECK(std::abs(s.mean) < 4.0 * s.se);
    CHECK(s.variance == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("stream ids do not collide across purposes") {
    CHECK(stream_id(StreamPurpose::MeanField, 0, 5) !=
          stream_id(StreamPurpose::Population, 0, 5));
    CHECK(stream_id(StreamPurpose::MeanField, 1, 5) !=
          stream_id(StreamPurpose::MeanField, 0, 5));
}
