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

#include <catch2/catch_amalgamated.hpp>

#include "cfbeam/rng.hpp"

using cfbeam::SplitRng;

TEST_CASE("identical seeds give identical streams") {
    SplitRng a(123), b(123);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("split streams are independent of parent consumption") {
    SplitRng parent(9);
    SplitRng child_before = parent.split("stream", 4);
    for (int i = 0; i < 57; ++i) parent.next_u64();
    SplitRng child_after = parent.split("stream", 4);
    for (int i = 0; i < 100; ++i) REQUIRE(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("different tags give different streams") {
    SplitRng parent(9);
    auto a = parent.split("x", 0);
    auto b = parent.split("x", 1);
    REQUIRE(a.next_u64() != b.next_u64());
}

TEST_CASE("uniform stays in range and fills it") {
    SplitRng rng(5);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    REQUIRE(lo < 0.01);
    REQUIRE(hi > 0.99);
}

TEST_CASE("Box-Muller normals have the right moments") {
    SplitRng rng(6);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.01);
    REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("complex normal has the requested total variance") {
    SplitRng rng(7);
    const int n = 100000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::norm(rng.cnormal(0.4));
    REQUIRE(std::abs(acc / n - 0.4) < 0.01);
}
