// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <random>

namespace ner {

/// Seeded random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the conversions below are written
/// out so that streams are identical across standard libraries (the
/// <random> distributions are implementation-defined).
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) : engine_ { seed } {}

    auto next() -> std::uint64_t { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    auto uniform() -> double
    {
        return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
    }

    /// Uniform in the closed interval [lo, hi].
    auto uniform(double lo, double hi) -> double
    {
        const double u = static_cast<double>(engine_() >> 11U)
                         / static_cast<double>((std::uint64_t { 1 } << 53U) - 1);
        return lo + (hi - lo) * u;
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    auto below(std::uint64_t n) -> std::uint64_t
    {
        if (n == 0) {
            return 0;
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % n;
    }

    auto bernoulli(double p) -> bool { return uniform() < p; }

    /// Fisher-Yates, drawing indices with below().
    template <typename Container>
    void shuffle(Container& items)
    {
        using std::swap;
        for (std::size_t i = items.size(); i > 1; --i) {
            swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace ner
