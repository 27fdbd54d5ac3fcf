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

#include "cfbeam/measurement.hpp"

using namespace cfbeam;

namespace {
CVec random_cvec(int n, SplitRng& rng, bool unit = false) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.cnormal(1.0);
    if (unit) v /= v.norm();
    return v;
}
}  // namespace

TEST_CASE("noiseless beam response is the exact inner product") {
    SplitRng rng(1);
    const CVec h = random_cvec(8, rng);
    const CVec g = random_cvec(8, rng, true);
    SplitRng noise(2);
    // zero noise variance comes out of an infinite training power limit;
    // here noise_var = 0 directly
    REQUIRE(std::abs(beam_response(h, g, 1.0, 0.0, noise) - h.dot(g)) < 1e-15);
}

TEST_CASE("aligned unit vectors give response one") {
    SplitRng rng(3);
    CVec h = random_cvec(6, rng, true);
    SplitRng noise(4);
    REQUIRE(std::abs(beam_response(h, h, 2.0, 0.0, noise) - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("uplink response is the conjugate of the downlink response") {
    SplitRng rng(5);
    const CVec h = random_cvec(8, rng);
    const CVec g = random_cvec(8, rng, true);
    SplitRng n1(6), n2(6);
    const cplx dl = beam_response(h, g, 1.0, 0.0, n1, TrainingDirection::downlink);
    const cplx ul = beam_response(h, g, 1.0, 0.0, n2, TrainingDirection::uplink);
    REQUIRE(std::abs(dl - std::conj(ul)) < 1e-14);
}

TEST_CASE("doubling the training power halves the error variance") {
    SplitRng rng(7);
    const CVec h = random_cvec(8, rng);
    const CVec g = random_cvec(8, rng, true);
    const cplx truth = h.dot(g);
    const double noise_var = 0.25;
    auto variance = [&](double p_tr, std::uint64_t seed) {
        SplitRng noise(seed);
        double acc = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i)
            acc += std::norm(beam_response(h, g, p_tr, noise_var, noise) - truth);
        return acc / n;
    };
    const double v1 = variance(1.0, 11);
    const double v2 = variance(2.0, 12);
    REQUIRE(std::abs(v1 - noise_var) < 0.05 * noise_var);
    REQUIRE(std::abs(v1 / v2 - 2.0) < 0.1);
}

TEST_CASE("beam response rejects non-positive training power") {
    SplitRng rng(8);
    const CVec h = random_cvec(4, rng);
    const CVec g = random_cvec(4, rng, true);
    SplitRng noise(9);
    REQUIRE_THROWS_AS(beam_response(h, g, 0.0, 0.1, noise), std::invalid_argument);
    REQUIRE_THROWS_AS(beam_response(h, g, -1.0, 0.1, noise), std::invalid_argument);
}

TEST_CASE("group responses average each group") {
    SECTION("constant input reproduces the constant") {
        const std::vector<cplx> in(8, cplx(0.3, -0.7));
        const auto out = group_responses(in, contiguous_groups(8, 2));
        for (const auto& v : out) REQUIRE(std::abs(v - cplx(0.3, -0.7)) < 1e-15);
    }
    SECTION("distinct values match independently computed means") {
        SplitRng rng(10);
        std::vector<cplx> in(64);
        for (auto& v : in) v = rng.cnormal(1.0);
        const auto map = contiguous_groups(64, 16);
        const auto out = group_responses(in, map);
        for (int g = 0; g < 16; ++g) {
            cplx acc = 0.0;
            for (const int k : map[g]) acc += in[k];
            REQUIRE(std::abs(out[g] - acc / 4.0) < 1e-12);
        }
    }
    SECTION("singleton groups are the identity") {
        SplitRng rng(11);
        std::vector<cplx> in(5);
        for (auto& v : in) v = rng.cnormal(1.0);
        const auto out = group_responses(in, contiguous_groups(5, 5));
        for (int i = 0; i < 5; ++i) REQUIRE(out[i] == in[i]);
    }
}

TEST_CASE("group responses reject bad group maps") {
    const std::vector<cplx> in(4, cplx(1.0, 0.0));
    REQUIRE_THROWS_AS(group_responses(in, {{0, 1}, {}, {2, 3}}), std::invalid_argument);
    REQUIRE_THROWS_AS(group_responses(in, {{0, 1}, {1, 2, 3}}), std::invalid_argument);
    REQUIRE_THROWS_AS(group_responses(in, {{0, 1}, {2}}), std::invalid_argument);
}

TEST_CASE("response table is reproducible and matches direct measurement structure") {
    ScenarioConfig cfg;
    cfg.upa_rows = 4;
    cfg.upa_cols = 2;
    cfg.num_subcarriers = 64;
    cfg.subcarriers_per_user = 16;
    cfg.groups_per_user = 4;
    const Scene scene = gen_scene(cfg, 3, SplitRng(12));
    const CMat codebook = dft_codebook(4, 2);
    const auto probes = make_probing_beams(cfg, ProbingKind::expanded_steering);
    const auto t1 = build_response_table(scene, cfg, probes, codebook,
                                         TrainingDirection::downlink, SplitRng(13));
    const auto t2 = build_response_table(scene, cfg, probes, codebook,
                                         TrainingDirection::downlink, SplitRng(13));
    REQUIRE(t1.noisy[1][2] == t2.noisy[1][2]);
    REQUIRE(t1.num_probing == 1);
    REQUIRE(t1.num_narrow == 8);
    REQUIRE(t1.noiseless[0][0].rows() == 9);
    REQUIRE(t1.noiseless[0][0].cols() == 4);

    // noiseless entries equal directly computed grouped responses
    const Vec freqs = cfg.subcarrier_freqs();
    const CMat h = channel_matrix(scene.realizations[0].links[0], cfg, freqs);
    for (int g = 0; g < 4; ++g) {
        cplx acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += h.col(g * 4 + k).dot(codebook.col(3));
        // h^H f is conj(f^H h); table stores the downlink convention
        REQUIRE(std::abs(t1.noiseless[0][0](1 + 3, g) - acc / 4.0) < 1e-12);
    }
}

TEST_CASE("thread count never changes measurement output") {
    ScenarioConfig cfg;
    cfg.upa_rows = 4;
    cfg.upa_cols = 2;
    cfg.num_subcarriers = 64;
    cfg.subcarriers_per_user = 16;
    cfg.groups_per_user = 4;
    const Scene scene = gen_scene(cfg, 16, SplitRng(40));
    const CMat cb = dft_codebook(4, 2);
    const auto probes = make_probing_beams(cfg, ProbingKind::expanded_steering);
    setenv("CFBEAM_THREADS", "1", 1);
    const auto serial = build_response_table(scene, cfg, probes, cb,
                                             TrainingDirection::downlink, SplitRng(41));
    unsetenv("CFBEAM_THREADS");
    const auto parallel = build_response_table(scene, cfg, probes, cb,
                                               TrainingDirection::downlink, SplitRng(41));
    for (int i = 0; i < 16; ++i)
        for (int b = 0; b < cfg.num_bs; ++b) {
            REQUIRE(serial.noisy[i][b] == parallel.noisy[i][b]);
            REQUIRE(serial.noiseless[i][b] == parallel.noiseless[i][b]);
        }
}
