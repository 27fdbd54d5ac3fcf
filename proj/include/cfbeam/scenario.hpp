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

#include <cstdint>
#include <string>
#include <vector>

#include "cfbeam/types.hpp"

namespace cfbeam {

/// Axis-aligned rectangle of candidate user positions at fixed height.
struct Region {
    double x_min = -10.0, x_max = 10.0;
    double y_min = -20.0, y_max = 20.0;
    double z = 1.5;

    Vec3 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0, z}; }
    bool degenerate() const { return !(x_max > x_min) || !(y_max > y_min); }
};

/// Full system configuration. Defaults follow the 60 GHz urban setup:
/// 3 BSs with 8x4 UPAs serving 2 users over 64-subcarrier blocks grouped
/// by 4, tracking period 96 ms with 0.48 ms per trained beam.
struct ScenarioConfig {
    int num_bs = 3;          // B
    int upa_rows = 8;        // H (vertical)
    int upa_cols = 4;        // W (horizontal)
    int num_users = 2;       // U
    int num_subcarriers = 1024;        // K
    double carrier_hz = 60e9;
    double bandwidth_hz = 500e6;       // B_w
    int subcarriers_per_user = 64;     // K_u
    int groups_per_user = 16;          // K-bar_u
    int paths_per_link = 3;            // L
    double p_dl_total_w = 5.0;
    double p_ul_w = 0.2;
    double noise_var_w = 2.0e-12;      // sigma^2
    double tracking_period_ms = 96.0;  // T
    double beam_time_ms = 0.48;        // T_b
    int num_probing_beams = 1;         // N_W
    double antenna_spacing_over_lambda = 0.5;
    Region region;
    std::vector<Vec3> bs_positions = {{-25.0, -25.0, 8.0}, {25.0, 0.0, 8.0}, {-25.0, 25.0, 8.0}};
    std::uint64_t seed = 1;

    // Scene-generator knobs (synthetic stand-in for a ray-traced environment).
    int num_scatterers = 10;
    double reflection_loss_db = 16.0;

    // Per-subcarrier training powers; <= 0 selects the defaults
    // P_dl_total/K_u (downlink) and P_ul/K_u (uplink).
    double p_tr_dl_w = 0.0;
    double p_tr_ul_w = 0.0;

    // Labels are computed from noisy narrow-beam measurements by default.
    bool noisy_labels = true;

    int num_antennas() const { return upa_rows * upa_cols; }  // M
    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    int group_size() const { return subcarriers_per_user / groups_per_user; }
    double data_power_per_subcarrier() const {
        return p_dl_total_w / (static_cast<double>(num_users) * subcarriers_per_user);
    }
    double dl_training_power() const {
        return p_tr_dl_w > 0.0 ? p_tr_dl_w : p_dl_total_w / subcarriers_per_user;
    }
    double ul_training_power() const {
        return p_tr_ul_w > 0.0 ? p_tr_ul_w : p_ul_w / subcarriers_per_user;
    }

    /// Center frequencies of the canonical K_u-subcarrier block, centered
    /// in the system band.
    Vec subcarrier_freqs() const {
        Vec f(subcarriers_per_user);
        const double df = bandwidth_hz / num_subcarriers;
        for (int k = 0; k < subcarriers_per_user; ++k)
            f[k] = carrier_hz + df * (k - subcarriers_per_user / 2.0);
        return f;
    }

    /// Field-path diagnostics; empty means the config is usable.
    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        auto req = [&](bool ok, const std::string& msg) {
            if (!ok) errs.push_back(msg);
        };
        req(upa_rows >= 1 && upa_cols >= 1, "scenario.upa_rows/upa_cols: H and W must be >= 1");
        req(num_bs >= 1, "scenario.num_bs: must be >= 1");
        req(num_users >= 1, "scenario.num_users: must be >= 1");
        req(paths_per_link >= 1, "scenario.paths_per_link: L must be >= 1");
        req(num_probing_beams >= 1, "scenario.num_probing_beams: N_W must be >= 1");
        req(subcarriers_per_user >= 1 && groups_per_user >= 1 &&
                subcarriers_per_user % groups_per_user == 0,
            "scenario.subcarriers_per_user: K_u must be divisible by groups_per_user");
        req(subcarriers_per_user <= num_subcarriers,
            "scenario.subcarriers_per_user: K_u must not exceed num_subcarriers");
        req(tracking_period_ms > 0.0, "scenario.tracking_period_ms: T must be > 0");
        req(beam_time_ms > 0.0, "scenario.beam_time_ms: T_b must be > 0");
        req(carrier_hz > 0.0 && bandwidth_hz > 0.0,
            "scenario.carrier_hz/bandwidth_hz: must be > 0");
        req(noise_var_w > 0.0, "scenario.noise_var_w: sigma^2 must be > 0");
        req(p_dl_total_w > 0.0 && p_ul_w > 0.0, "scenario.p_dl_total_w/p_ul_w: must be > 0");
        req(!region.degenerate(), "scenario.region: rectangle must be non-degenerate");
        req(static_cast<int>(bs_positions.size()) == num_bs,
            "scenario.bs_positions: need exactly num_bs entries");
        req(num_scatterers >= paths_per_link - 1,
            "scenario.num_scatterers: need at least L-1 scatterers");
        req(antenna_spacing_over_lambda > 0.0,
            "scenario.antenna_spacing_over_lambda: must be > 0");
        return errs;
    }
};

}  // namespace cfbeam
