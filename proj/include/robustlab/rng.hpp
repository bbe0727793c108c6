// SPDX-License-Identifier: Apache-2.0
//
// Philox4x32-10 counter-based generator. Every random stream in the library is
// keyed by (seed, purpose tag), so streams are independent of each other and
// of the order in which they are consumed.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace robustlab {

class Philox {
public:
    Philox(std::uint64_t seed, std::string_view tag);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (spare value cached).
    double normal();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// k distinct indices from [0, n), uniformly, returned in sorted order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> buffer_{};
    std::size_t used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Mixes a seed with a small integer to derive per-repeat or per-network seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace robustlab
