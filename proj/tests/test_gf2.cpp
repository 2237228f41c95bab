#include "doctest.h"

#include "oracles.hpp"
#include "qkd/errors.hpp"
#include "qkd/gf2.hpp"

using namespace qkd;

TEST_CASE("bit string basics") {
    BitString s = BitString::parse("01101");
    CHECK(s.size() == 5);
    CHECK(s.str() == "01101");
    CHECK(s.weight() == 3);
    CHECK((s ^ s).weight() == 0);
    CHECK(s.to_uint() == 0b01101u);
    CHECK(BitString::from_uint(0b01101u, 5) == s);
    CHECK_THROWS_AS(BitString::parse("01a"), InputError);
}

TEST_CASE("bit string select and subset") {
    const BitString v = BitString::parse("101100");
    const BitString mask = BitString::parse("110010");
    CHECK(v.select_where(mask, true).str() == "100");
    CHECK(v.select_where(mask, false).str() == "110");
    CHECK(v.subset({5, 0, 2}).str() == "011");
}

TEST_CASE("exact weight sampler") {
    RngStream rng = derive_stream(7, Role::Sampler);
    for (int t = 0; t < 50; ++t) {
        BitString s = BitString::random_exact_weight(10, 4, rng);
        CHECK(s.weight() == 4);
    }
}

TEST_CASE("rank on the pinned cases") {
    CHECK(rank(BitMatrix::identity(4)) == 4);
    CHECK(rank(BitMatrix(3, 5)) == 0);
    const BitMatrix m = BitMatrix::from_strings({"110", "011", "101"});
    CHECK(rank(m) == 2);
    CHECK(oracle::rank_by_span(m) == 2); // exhaustive row-span enumeration
}

TEST_CASE("rank agrees with the span oracle on random matrices") {
    RngStream rng = derive_stream(11, Role::Sampler);
    for (int t = 0; t < 40; ++t) {
        const std::size_t rows = 1 + rng.below(5), cols = 1 + rng.below(7);
        BitMatrix m(0, cols);
        for (std::size_t i = 0; i < rows; ++i)
            m.append_row(BitString::random(cols, rng));
        CHECK(rank(m) == oracle::rank_by_span(m));
    }
}

TEST_CASE("syndrome pinned values and linearity") {
    const BitMatrix h = BitMatrix::from_strings({"110", "011"});
    CHECK(syndrome(h, BitString::parse("111")).str() == "00");
    CHECK(syndrome(h, BitString::parse("100")).str() == "10");
    CHECK(syndrome(h, BitString(3)).str() == "00");
    CHECK_THROWS_AS(syndrome(h, BitString::parse("1101")), InputError);

    RngStream rng = derive_stream(3, Role::Sampler);
    for (int t = 0; t < 30; ++t) {
        const BitString x = BitString::random(3, rng), y = BitString::random(3, rng);
        CHECK(syndrome(h, x ^ y) == (syndrome(h, x) ^ syndrome(h, y)));
    }
}

TEST_CASE("nullspace strings are codewords") {
    RngStream rng = derive_stream(5, Role::Sampler);
    for (int t = 0; t < 20; ++t) {
        const std::size_t cols = 2 + rng.below(8);
        BitMatrix h(0, cols);
        const std::size_t rows = 1 + rng.below(cols);
        for (std::size_t i = 0; i < rows; ++i)
            h.append_row(BitString::random(cols, rng));
        for (const BitString& v : gf2_nullspace(h))
            CHECK_FALSE(syndrome(h, v).any());
    }
}

TEST_CASE("dual of dual spans the original rows") {
    RngStream rng = derive_stream(13, Role::Sampler);
    for (int t = 0; t < 20; ++t) {
        const std::size_t cols = 2 + rng.below(7);
        BitMatrix h(0, cols);
        const std::size_t rows = 1 + rng.below(cols);
        for (std::size_t i = 0; i < rows; ++i)
            h.append_row(BitString::random(cols, rng));
        BitMatrix dual(0, cols);
        for (const BitString& v : gf2_nullspace(h))
            dual.append_row(v);
        BitMatrix dual2(0, cols);
        if (dual.rows() == 0)
            dual2 = BitMatrix::identity(cols);
        else
            for (const BitString& v : gf2_nullspace(dual))
                dual2.append_row(v);
        // Row space of the double dual equals the original row space.
        BitMatrix stacked = h;
        for (std::size_t i = 0; i < dual2.rows(); ++i)
            stacked.append_row(dual2.row(i));
        CHECK(rank(stacked) == rank(h));
        CHECK(rank(dual2) == rank(h));
    }
}

TEST_CASE("solve returns the free-variables-zero solution") {
    const BitMatrix h = BitMatrix::from_strings({"110", "011"});
    auto x = gf2_solve(h, BitString::parse("10"));
    REQUIRE(x.has_value());
    CHECK(x->str() == "100");
    CHECK(syndrome(h, *x).str() == "10");
}
