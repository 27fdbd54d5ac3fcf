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
#include <filesystem>

#include "cfbeam/channel.hpp"

using namespace cfbeam;

TEST_CASE("steering vector degenerates to all-ones when both phases vanish") {
    // phi = pi/2 kills the vertical phase, sin(theta) = 0 the horizontal one
    const CVec a = steering_vector(0.0, kPi / 2.0, 2, 2, 0.5);
    REQUIRE(a.size() == 4);
    for (int i = 0; i < 4; ++i) REQUIRE(std::abs(a[i] - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("single-antenna steering vector is [1]") {
    const CVec a = steering_vector(0.7, 1.9, 1, 1, 0.5);
    REQUIRE(a.size() == 1);
    REQUIRE(std::abs(a[0] - cplx(1.0, 0.0)) < 1e-15);
}

TEST_CASE("steering phases match the scalar exponent expressions") {
    const double theta = kPi / 6.0, phi = kPi / 3.0;
    const CVec a = steering_vector(theta, phi, 2, 2, 0.5);
    for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 2; ++w) {
            const double want =
                2.0 * kPi * 0.5 * (h * std::cos(phi) + w * std::sin(theta) * std::sin(phi));
            REQUIRE(std::abs(std::remainder(std::arg(a[h * 2 + w]) - want, 2.0 * kPi)) < 1e-12);
        }
}

TEST_CASE("steering entries are unit modulus for random angles") {
    SplitRng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const double theta = rng.uniform(-kPi, kPi);
        const double phi = rng.uniform(0.0, kPi);
        const CVec a = steering_vector(theta, phi, 8, 4, 0.5);
        for (int i = 0; i < a.size(); ++i) REQUIRE(std::abs(std::abs(a[i]) - 1.0) < 1e-12);
    }
}

TEST_CASE("channel matrix equals the per-path brute-force sum") {
    ScenarioConfig cfg;
    const Scene scene = gen_scene(cfg, 4, SplitRng(17));
    const Vec freqs = cfg.subcarrier_freqs();
    for (const auto& cr : scene.realizations)
        for (int b = 0; b < cfg.num_bs; ++b) {
            const CMat h = channel_matrix(cr.links[b], cfg, freqs);
            for (int k = 0; k < freqs.size(); k += 13) {
                CVec ref = CVec::Zero(cfg.num_antennas());
                for (const auto& p : cr.links[b].paths)
                    ref += p.gain * std::exp(cplx(0.0, -2.0 * kPi * freqs[k] * p.delay_s)) *
                           steering_vector(p.azimuth_rad, p.elevation_rad, cfg.upa_rows,
                                           cfg.upa_cols, cfg.antenna_spacing_over_lambda);
                REQUIRE((h.col(k) - ref).norm() <= 1e-10 * ref.norm());
            }
        }
}

TEST_CASE("scenes are bitwise identical under the same seed") {
    ScenarioConfig cfg;
    const Scene a = gen_scene(cfg, 6, SplitRng(cfg.seed));
    const Scene b = gen_scene(cfg, 6, SplitRng(cfg.seed));
    REQUIRE(a.realizations.size() == b.realizations.size());
    for (std::size_t i = 0; i < a.realizations.size(); ++i) {
        REQUIRE(a.realizations[i].user_position == b.realizations[i].user_position);
        for (int bs = 0; bs < cfg.num_bs; ++bs) {
            const auto& pa = a.realizations[i].links[bs].paths;
            const auto& pb = b.realizations[i].links[bs].paths;
            REQUIRE(pa.size() == pb.size());
            for (std::size_t l = 0; l < pa.size(); ++l) {
                REQUIRE(pa[l].gain == pb[l].gain);
                REQUIRE(pa[l].delay_s == pb[l].delay_s);
                REQUIRE(pa[l].azimuth_rad == pb[l].azimuth_rad);
                REQUIRE(pa[l].elevation_rad == pb[l].elevation_rad);
            }
        }
    }
}

TEST_CASE("LOS delay equals distance over c for every sample") {
    ScenarioConfig cfg;
    const Scene scene = gen_scene(cfg, 1000, SplitRng(23));
    for (const auto& cr : scene.realizations)
        for (int b = 0; b < cfg.num_bs; ++b) {
            const double dist = (cr.user_position - cfg.bs_positions[b]).norm();
            REQUIRE(std::abs(cr.links[b].paths[0].delay_s - dist / kSpeedOfLight) < 1e-12);
        }
}

TEST_CASE("single-path link angles match the analytic geometry") {
    ScenarioConfig cfg;
    cfg.paths_per_link = 1;
    cfg.num_scatterers = 0;
    const Scene scene = gen_scene(cfg, 20, SplitRng(29));
    for (const auto& cr : scene.realizations)
        for (int b = 0; b < cfg.num_bs; ++b) {
            const Vec3 d = cr.user_position - cfg.bs_positions[b];
            const double az_global = std::atan2(d.y(), d.x());
            const double expect_az =
                std::remainder(az_global - scene.bs_boresight_azimuth[b], 2.0 * kPi);
            const double expect_el = std::acos(d.z() / d.norm());
            REQUIRE(std::abs(cr.links[b].paths[0].azimuth_rad - expect_az) < 1e-12);
            REQUIRE(std::abs(cr.links[b].paths[0].elevation_rad - expect_el) < 1e-12);
        }
}

TEST_CASE("gen_scene rejects bad inputs") {
    ScenarioConfig cfg;
    REQUIRE_THROWS_AS(gen_scene(cfg, 0, SplitRng(1)), std::invalid_argument);
    ScenarioConfig bad = cfg;
    bad.paths_per_link = 0;
    REQUIRE_THROWS_AS(gen_scene(bad, 3, SplitRng(1)), std::invalid_argument);
    ScenarioConfig degenerate = cfg;
    degenerate.region.x_max = degenerate.region.x_min;
    REQUIRE_THROWS_AS(gen_scene(degenerate, 3, SplitRng(1)), std::invalid_argument);
}

TEST_CASE("channel dump round trip preserves every path") {
    ScenarioConfig cfg;
    const Scene scene = gen_scene(cfg, 5, SplitRng(31));
    const std::string path = "dump_roundtrip.csv";
    write_channel_dump(scene, path);
    const auto loaded = read_channel_dump(path, cfg.num_bs, cfg.paths_per_link);
    REQUIRE(loaded.size() == scene.realizations.size());
    for (std::size_t u = 0; u < loaded.size(); ++u)
        for (int b = 0; b < cfg.num_bs; ++b)
            for (int l = 0; l < cfg.paths_per_link; ++l) {
                const auto& got = loaded[u].links[b].paths[l];
                const auto& want = scene.realizations[u].links[b].paths[l];
                REQUIRE(got.gain == want.gain);
                REQUIRE(got.delay_s == want.delay_s);
                REQUIRE(got.azimuth_rad == want.azimuth_rad);
                REQUIRE(got.elevation_rad == want.elevation_rad);
            }
    std::filesystem::remove(path);
}

TEST_CASE("channel dump parser reports the offending line") {
    const std::string path = "dump_bad.csv";
    {
        std::ofstream out(path);
        out << "b,u,l,gain_re,gain_im,delay_s,azimuth_rad,elevation_rad,pos_x,pos_y,pos_z\n";
        out << "0,0,0,1,0,1e-7,0.1,1.5,1,2,1.5\n";
        out << "0,0,1,1,0,1e-7,0.1,x,1,2,1.5\n";
    }
    try {
        read_channel_dump(path, 1, 2);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        REQUIRE(std::string(e.what()).find(":3:") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("channel dump parser rejects missing links and L mismatch") {
    const std::string path = "dump_missing.csv";
    {
        std::ofstream out(path);
        out << "b,u,l,gain_re,gain_im,delay_s,azimuth_rad,elevation_rad,pos_x,pos_y,pos_z\n";
        out << "0,0,0,1,0,1e-7,0.1,1.5,1,2,1.5\n";  // BS 1 never appears
    }
    REQUIRE_THROWS_WITH(read_channel_dump(path, 2, 1),
                        Catch::Matchers::ContainsSubstring("has 0 paths"));
    {
        std::ofstream out(path);
        out << "b,u,l,gain_re,gain_im,delay_s,azimuth_rad,elevation_rad,pos_x,pos_y,pos_z\n";
        out << "0,0,0,1,0,1e-7,0.1,1.5,1,2,1.5\n";  // only one of two paths
    }
    REQUIRE_THROWS_WITH(read_channel_dump(path, 1, 2),
                        Catch::Matchers::ContainsSubstring("expected 2"));
    std::filesystem::remove(path);
}
