#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>
#include <vector>

#include "assure/rng.hpp"

using namespace assure;

TEST_CASE("substreams are deterministic and distinct", "[rng]") {
    RngStream a = substream(42, salts::kAssuranceDraw, 80, 3);
    RngStream b = substream(42, salts::kAssuranceDraw, 80, 3);
    RngStream c = substream(42, salts::kAssuranceDraw, 80, 4);
    for (int i = 0; i < 16; ++i) {
        const auto va = a();
        REQUIRE(va == b());
        REQUIRE(va != c());
    }
}

TEST_CASE("derived keys differ across every id slot", "[rng]") {
    std::set<std::uint64_t> keys;
    for (std::uint64_t seed : {1ULL, 2ULL})
        for (std::uint64_t salt : {salts::kAssuranceDraw, salts::kModalRep})
            for (std::uint64_t a = 0; a < 4; ++a)
                for (std::uint64_t b = 0; b < 4; ++b) keys.insert(derive_key(seed, salt, a, b));
    REQUIRE(keys.size() == 2u * 2u * 4u * 4u);
}

TEST_CASE("uniform01 stays inside the open unit interval", "[rng]") {
    RngStream g(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = g.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean of U(0,1) within 3 standard errors
    REQUIRE(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("stream satisfies UniformRandomBitGenerator for std distributions", "[rng]") {
    RngStream g = substream(5, 1);
    std::binomial_distribution<int> binom(100, 0.25);
    const int v = binom(g);
    REQUIRE(v >= 0);
    REQUIRE(v <= 100);
}
