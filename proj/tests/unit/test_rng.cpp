#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "robustlab/rng.hpp"

using robustlab::Philox;

TEST_CASE("philox known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(Philox::block(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::block(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::block(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are keyed by seed and tag") {
    Philox a(1, "x");
    Philox b(1, "x");
    Philox c(1, "y");
    Philox d(2, "x");
    bool differ_c = false;
    bool differ_d = false;
    for (int i = 0; i < 16; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        differ_c = differ_c || va != c.next_u64();
        differ_d = differ_d || va != d.next_u64();
    }
    CHECK(differ_c);
    CHECK(differ_d);
}

TEST_CASE("distribution moments") {
    Philox rng(3, "moments");
    const int n = 200000;
    double su = 0.0;
    double sn = 0.0;
    double snn = 0.0;
    double umin = 1.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK_FALSE((u < 0.0 || u >= 1.0));
        umin = std::min(umin, u);
        su += u;
        const double z = rng.normal();
        sn += z;
        snn += z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 0.005);
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(std::abs(snn / n - 1.0) < 0.02);
}

TEST_CASE("bounded integers and sampling") {
    Philox rng(4, "ints");
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts) {
        CHECK(std::abs(c - 10000) < 500);
    }
    for (int t = 0; t < 50; ++t) {
        const auto s = rng.sample_without_replacement(20, 6);
        CHECK(s.size() == 6);
        CHECK(std::is_sorted(s.begin(), s.end()));
        CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 6);
        CHECK(s.back() < 20);
    }
    CHECK(rng.sample_without_replacement(5, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4});

    std::vector<int> v{1, 2, 3, 4, 5, 6};
    rng.shuffle(v);
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("derived seeds") {
    CHECK(robustlab::derive_seed(1, 0) == robustlab::derive_seed(1, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 10; ++s) {
        for (std::uint64_t salt = 0; salt < 10; ++salt) {
            seen.insert(robustlab::derive_seed(s, salt));
        }
    }
    CHECK(seen.size() == 100);
}
