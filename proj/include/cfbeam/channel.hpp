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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/rng.hpp"
#include "cfbeam/scenario.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

/// UPA steering vector a_z(phi) (x) a_y(theta, phi), unit-modulus entries.
/// phi is the polar angle from the vertical array axis, theta the azimuth.
inline CVec steering_vector(double theta, double phi, int H, int W, double d_over_lambda) {
    if (H < 1 || W < 1) throw std::invalid_argument("steering_vector: H and W must be >= 1");
    const double kz = 2.0 * kPi * d_over_lambda * std::cos(phi);
    const double ky = 2.0 * kPi * d_over_lambda * std::sin(theta) * std::sin(phi);
    CVec a(H * W);
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            a[h * W + w] = std::exp(cplx(0.0, kz * h + ky * w));
    return a;
}

struct PathComponent {
    cplx gain;             // alpha
    double delay_s;        // tau
    double azimuth_rad;    // theta, in the BS local frame
    double elevation_rad;  // phi, polar angle from vertical
};

struct LinkPaths {
    std::vector<PathComponent> paths;
};

/// Multipath parameters of one user position toward every BS; the ground
/// truth of every experiment.
struct ChannelRealization {
    Vec3 user_position;
    std::vector<LinkPaths> links;  // indexed by BS
};

/// Static propagation environment plus the sampled user positions.
struct Scene {
    std::vector<ChannelRealization> realizations;
    std::vector<Vec3> scatterers;
    std::vector<double> scatterer_phases;
    std::vector<double> bs_boresight_azimuth;  // toward the region center
};

/// Azimuth (relative to `boresight`) and polar elevation of `target` as
/// seen from `origin`, plus the distance.
struct LocalAngles {
    double azimuth, elevation, distance;
};

inline LocalAngles local_angles(const Vec3& origin, double boresight, const Vec3& target) {
    const Vec3 d = target - origin;
    const double r = d.norm();
    double az = std::atan2(d.y(), d.x()) - boresight;
    az = std::remainder(az, 2.0 * kPi);
    const double el = std::acos(std::clamp(d.z() / r, -1.0, 1.0));
    return {az, el, r};
}

/// Synthetic scene generator: one LOS path per link plus L-1 single-bounce
/// paths through the strongest members of a fixed scatterer field. Gains are
/// free-space at the carrier with geometry-determined phase; each scatterer
/// contributes a fixed reflection loss and a fixed random reflection phase.
/// Deterministic under (config, seed).
inline Scene gen_scene(const ScenarioConfig& cfg, int n_positions, const SplitRng& rng) {
    if (n_positions < 1) throw std::invalid_argument("gen_scene: n_positions must be >= 1");
    if (cfg.paths_per_link < 1) throw std::invalid_argument("gen_scene: L must be >= 1");
    if (cfg.region.degenerate()) throw std::invalid_argument("gen_scene: degenerate region");

    const int B = cfg.num_bs;
    const int L = cfg.paths_per_link;
    const double lambda = cfg.wavelength();
    const double refl_amp = std::pow(10.0, -cfg.reflection_loss_db / 20.0);
    const Vec3 center = cfg.region.center();

    Scene scene;
    scene.bs_boresight_azimuth.resize(B);
    for (int b = 0; b < B; ++b) {
        const Vec3 d = center - cfg.bs_positions[b];
        scene.bs_boresight_azimuth[b] = std::atan2(d.y(), d.x());
    }

    SplitRng scat_rng = rng.split("scatterers");
    scene.scatterers.resize(cfg.num_scatterers);
    scene.scatterer_phases.resize(cfg.num_scatterers);
    for (int s = 0; s < cfg.num_scatterers; ++s) {
        scene.scatterers[s] = {scat_rng.uniform(cfg.region.x_min, cfg.region.x_max),
                               scat_rng.uniform(cfg.region.y_min, cfg.region.y_max),
                               cfg.region.z};
        scene.scatterer_phases[s] = scat_rng.uniform(0.0, 2.0 * kPi);
    }

    scene.realizations.resize(n_positions);
    for (int i = 0; i < n_positions; ++i) {
        SplitRng pos_rng = rng.split("position", static_cast<std::uint64_t>(i));
        ChannelRealization& cr = scene.realizations[i];
        cr.user_position = {pos_rng.uniform(cfg.region.x_min, cfg.region.x_max),
                            pos_rng.uniform(cfg.region.y_min, cfg.region.y_max), cfg.region.z};
        cr.links.resize(B);
        for (int b = 0; b < B; ++b) {
            const Vec3& bs = cfg.bs_positions[b];
            const double bore = scene.bs_boresight_azimuth[b];
            auto& paths = cr.links[b].paths;
            paths.reserve(L);

            const LocalAngles los = local_angles(bs, bore, cr.user_position);
            const double tau0 = los.distance / kSpeedOfLight;
            const double amp0 = lambda / (4.0 * kPi * los.distance);
            paths.push_back({amp0 * std::exp(cplx(0.0, -2.0 * kPi * cfg.carrier_hz * tau0)),
                             tau0, los.azimuth, los.elevation});

            if (L > 1) {
                // pick the L-1 scatterers with the shortest bounce path
                std::vector<int> order(cfg.num_scatterers);
                std::iota(order.begin(), order.end(), 0);
                std::vector<double> tot(cfg.num_scatterers);
                for (int s = 0; s < cfg.num_scatterers; ++s)
                    tot[s] = (scene.scatterers[s] - bs).norm() +
                             (cr.user_position - scene.scatterers[s]).norm();
                std::stable_sort(order.begin(), order.end(),
                                 [&](int a, int c) { return tot[a] < tot[c]; });
                for (int j = 0; j < L - 1; ++j) {
                    const int s = order[j];
                    const LocalAngles dep = local_angles(bs, bore, scene.scatterers[s]);
                    const double tau = tot[s] / kSpeedOfLight;
                    const double amp = lambda / (4.0 * kPi * tot[s]) * refl_amp;
                    const double phase =
                        scene.scatterer_phases[s] - 2.0 * kPi * cfg.carrier_hz * tau;
                    paths.push_back({amp * std::exp(cplx(0.0, phase)), tau, dep.azimuth,
                                     dep.elevation});
                }
            }
        }
    }
    return scene;
}

/// Antenna-subcarrier channel of one link: column k is
/// h_k = sum_l alpha_l e^{-j 2 pi f_k tau_l} a(theta_l, phi_l).
inline CMat channel_matrix(const LinkPaths& link, const ScenarioConfig& cfg, const Vec& freqs) {
    const int M = cfg.num_antennas();
    const int L = static_cast<int>(link.paths.size());
    const int K = static_cast<int>(freqs.size());
    CMat steer(M, L);
    for (int l = 0; l < L; ++l)
        steer.col(l) = steering_vector(link.paths[l].azimuth_rad, link.paths[l].elevation_rad,
                                       cfg.upa_rows, cfg.upa_cols,
                                       cfg.antenna_spacing_over_lambda);
    CMat phase(L, K);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
            phase(l, k) = link.paths[l].gain *
                          std::exp(cplx(0.0, -2.0 * kPi * freqs[k] * link.paths[l].delay_s));
    return steer * phase;  // M x K
}

// ---- channel dump interchange format ------------------------------------
// CSV header: b,u,l,gain_re,gain_im,delay_s,azimuth_rad,elevation_rad,pos_x,pos_y,pos_z
// One row per path, 0-based b/u/l indices. Every (b,u) must carry exactly L rows.

inline void write_channel_dump(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_channel_dump: cannot open " + path);
    out << "b,u,l,gain_re,gain_im,delay_s,azimuth_rad,elevation_rad,pos_x,pos_y,pos_z\n";
    char buf[512];
    for (std::size_t u = 0; u < scene.realizations.size(); ++u) {
        const auto& cr = scene.realizations[u];
        for (std::size_t b = 0; b < cr.links.size(); ++b) {
            const auto& paths = cr.links[b].paths;
            for (std::size_t l = 0; l < paths.size(); ++l) {
                const auto& p = paths[l];
                std::snprintf(buf, sizeof(buf),
                              "%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              b, u, l, p.gain.real(), p.gain.imag(), p.delay_s, p.azimuth_rad,
                              p.elevation_rad, cr.user_position.x(), cr.user_position.y(),
                              cr.user_position.z());
                out << buf;
            }
        }
    }
}

/// Ingest externally produced channel dumps (e.g. ray-traced) in place of
/// gen_scene. Rejects missing links and path-count mismatches with the
/// offending line number.
inline std::vector<ChannelRealization> read_channel_dump(const std::string& path, int num_bs,
                                                         int paths_per_link) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_channel_dump: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_channel_dump: " + path + ": empty file");
    const std::string expect =
        "b,u,l,gain_re,gain_im,delay_s,azimuth_rad,elevation_rad,pos_x,pos_y,pos_z";
    if (line != expect)
        throw std::runtime_error("read_channel_dump: " + path + ":1: bad header, expected '" +
                                 expect + "'");

    std::vector<ChannelRealization> out;
    int line_no = 1;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("read_channel_dump: " + path + ":" + std::to_string(line_no) +
                                 ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> v;
        while (std::getline(ss, tok, ',')) {
            try {
                v.push_back(std::stod(tok));
            } catch (...) {
                fail("non-numeric field '" + tok + "'");
            }
        }
        if (v.size() != 11) fail("expected 11 fields, got " + std::to_string(v.size()));
        const int b = static_cast<int>(v[0]), u = static_cast<int>(v[1]),
                  l = static_cast<int>(v[2]);
        if (b < 0 || b >= num_bs) fail("BS index " + std::to_string(b) + " out of range");
        if (u < 0) fail("negative user index");
        if (l < 0 || l >= paths_per_link)
            fail("path index " + std::to_string(l) + " out of range for L=" +
                 std::to_string(paths_per_link));
        if (u >= static_cast<int>(out.size())) out.resize(u + 1);
        auto& cr = out[u];
        if (cr.links.empty()) cr.links.resize(num_bs);
        cr.user_position = {v[8], v[9], v[10]};
        auto& paths = cr.links[b].paths;
        if (static_cast<int>(paths.size()) != l)
            fail("out-of-order or duplicate path index for (b=" + std::to_string(b) +
                 ",u=" + std::to_string(u) + ")");
        paths.push_back({{v[3], v[4]}, v[5], v[6], v[7]});
    }
    line_no = -1;  // post-scan validation reports without a line
    for (std::size_t u = 0; u < out.size(); ++u) {
        if (out[u].links.empty())
            throw std::runtime_error("read_channel_dump: " + path + ": user " +
                                     std::to_string(u) + " has no links");
        for (int b = 0; b < num_bs; ++b) {
            const auto n = out[u].links[b].paths.size();
            if (static_cast<int>(n) != paths_per_link)
                throw std::runtime_error("read_channel_dump: " + path + ": link (b=" +
                                         std::to_string(b) + ",u=" + std::to_string(u) +
                                         ") has " + std::to_string(n) + " paths, expected " +
                                         std::to_string(paths_per_link));
        }
    }
    if (out.empty()) throw std::runtime_error("read_channel_dump: " + path + ": no data rows");
    return out;
}

}  // namespace cfbeam
