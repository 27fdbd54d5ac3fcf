// SPDX-License-Identifier: Apache-2.0
//
// cfbeam: probing-beam beam alignment workbench for mmWave cell-free MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string_view>

namespace cfbeam {

/// Splittable counter-based generator. Every stream is a (key, counter)
/// pair run through the splitmix64 finalizer, so results are identical
/// across platforms and independent of evaluation order between streams.
/// Child streams derived via split() never collide with the parent.
class SplitRng {
  public:
    explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ kGolden)) {}

    /// Derive an independent child stream. Same (key, tag) always gives
    /// the same child, regardless of how much the parent has been used.
    SplitRng split(std::uint64_t tag) const { return SplitRng(mix(key_ ^ mix(tag + kGolden)), 0); }

    SplitRng split(std::string_view name) const { return split(fnv1a(name)); }

    SplitRng split(std::string_view name, std::uint64_t index) const {
        return split(fnv1a(name) ^ mix(index + kGolden));
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

    /// Uniform on [0, 1): the top 53 bits of one draw.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; deterministic pair caching.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Circularly symmetric complex Gaussian with total variance `var`
    /// (var/2 per real component).
    std::complex<double> cnormal(double var) {
        const double s = std::sqrt(var / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    static constexpr std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

  private:
    SplitRng(std::uint64_t key, int) : key_(key) {}

    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
    static constexpr double kPi = 3.14159265358979323846;

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace cfbeam
