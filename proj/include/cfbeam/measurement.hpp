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

#include <stdexcept>
#include <vector>

#include "cfbeam/channel.hpp"
#include "cfbeam/codebook.hpp"
#include "cfbeam/rng.hpp"
#include "cfbeam/threading.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

enum class TrainingDirection { downlink, uplink };

/// One noisy beam-response measurement: h^H g (downlink) or g^H h (uplink)
/// plus complex Gaussian estimation noise of variance noise_var / P_tr.
/// The uplink noise vector is projected through the unit-norm beam, so the
/// effective variance is identical in both directions.
inline cplx beam_response(const CVec& h, const CVec& g, double p_tr, double noise_var,
                          SplitRng& rng, TrainingDirection dir = TrainingDirection::downlink) {
    if (p_tr <= 0.0) throw std::invalid_argument("beam_response: training power must be > 0");
    const cplx inner = (dir == TrainingDirection::downlink) ? h.dot(g) : g.dot(h);
    return inner + rng.cnormal(noise_var / p_tr);
}

/// Per-group mean of per-subcarrier responses. Groups must partition the
/// subcarrier set; an empty group is an error.
inline std::vector<cplx> group_responses(const std::vector<cplx>& per_subcarrier,
                                         const std::vector<std::vector<int>>& group_map) {
    std::vector<char> seen(per_subcarrier.size(), 0);
    std::vector<cplx> out;
    out.reserve(group_map.size());
    for (const auto& grp : group_map) {
        if (grp.empty()) throw std::invalid_argument("group_responses: empty group");
        cplx acc = 0.0;
        for (const int k : grp) {
            if (k < 0 || k >= static_cast<int>(per_subcarrier.size()))
                throw std::out_of_range("group_responses: subcarrier index out of range");
            if (seen[k]) throw std::invalid_argument("group_responses: groups overlap");
            seen[k] = 1;
            acc += per_subcarrier[k];
        }
        out.push_back(acc / static_cast<double>(grp.size()));
    }
    for (const char s : seen)
        if (!s) throw std::invalid_argument("group_responses: groups do not cover all subcarriers");
    return out;
}

/// Contiguous equal-size grouping of K_u subcarriers into K-bar groups.
inline std::vector<std::vector<int>> contiguous_groups(int subcarriers, int groups) {
    const int gs = subcarriers / groups;
    std::vector<std::vector<int>> map(groups);
    for (int g = 0; g < groups; ++g)
        for (int j = 0; j < gs; ++j) map[g].push_back(g * gs + j);
    return map;
}

/// Grouped beam responses of every (position, BS, beam): probing beams in
/// columns 0..N_W-1, then the M narrow beams. `noisy` carries the estimation noise at the training power,
/// `noiseless` the exact responses used by genie-style oracles.
struct BeamResponseTable {
    // [position][bs]: (N_W + M) x K-bar complex matrices
    std::vector<std::vector<CMat>> noisy;
    std::vector<std::vector<CMat>> noiseless;
    int num_probing = 0;
    int num_narrow = 0;
    double training_power = 0.0;
};

/// Measure all probing + narrow beams for every realization. Parallel over
/// positions with per-(position, BS) RNG streams, so threading never changes
/// the output.
inline BeamResponseTable build_response_table(const Scene& scene, const ScenarioConfig& cfg,
                                              const std::vector<ProbingBeamSet>& probes,
                                              const CMat& codebook, TrainingDirection dir,
                                              const SplitRng& rng) {
    const int B = cfg.num_bs;
    const int M = cfg.num_antennas();
    const int NW = cfg.num_probing_beams;
    const int n = static_cast<int>(scene.realizations.size());
    if (n == 0) throw std::invalid_argument("build_response_table: empty scene");
    if (codebook.rows() != M || codebook.cols() != M)
        throw std::invalid_argument("build_response_table: codebook does not match M");
    for (const auto& p : probes)
        if (p.beams.rows() != M || p.beams.cols() != NW)
            throw std::invalid_argument("build_response_table: probing beams do not match config");

    const double p_tr =
        (dir == TrainingDirection::downlink) ? cfg.dl_training_power() : cfg.ul_training_power();
    const double nv = cfg.noise_var_w / p_tr;
    const Vec freqs = cfg.subcarrier_freqs();
    const int Ku = cfg.subcarriers_per_user;
    const int Kb = cfg.groups_per_user;
    const int gs = cfg.group_size();

    std::vector<CMat> all_beams(B);
    for (int b = 0; b < B; ++b) {
        all_beams[b].resize(M, NW + M);
        all_beams[b].leftCols(NW) = probes[b].beams;
        all_beams[b].rightCols(M) = codebook;
    }

    BeamResponseTable table;
    table.num_probing = NW;
    table.num_narrow = M;
    table.training_power = p_tr;
    table.noisy.resize(n);
    table.noiseless.resize(n);

    const std::string stream = (dir == TrainingDirection::downlink) ? "meas-dl" : "meas-ul";
    parallel_for(n, [&](int i) {
        table.noisy[i].resize(B);
        table.noiseless[i].resize(B);
        for (int b = 0; b < B; ++b) {
            SplitRng mrng = rng.split(stream, static_cast<std::uint64_t>(i) * B + b);
            const CMat h = channel_matrix(scene.realizations[i].links[b], cfg, freqs);  // M x Ku
            // response(beam, k) = h_k^H g = (g^H h_k)^*; uplink is the conjugate
            CMat resp = (all_beams[b].adjoint() * h).conjugate();  // (NW+M) x Ku
            if (dir == TrainingDirection::uplink) resp = resp.conjugate();
            CMat noisy = resp;
            for (int c = 0; c < Ku; ++c)
                for (int r = 0; r < NW + M; ++r) noisy(r, c) += mrng.cnormal(nv);
            CMat g_noisy(NW + M, Kb), g_true(NW + M, Kb);
            for (int g = 0; g < Kb; ++g) {
                g_noisy.col(g) = noisy.middleCols(g * gs, gs).rowwise().mean();
                g_true.col(g) = resp.middleCols(g * gs, gs).rowwise().mean();
            }
            table.noisy[i][b] = std::move(g_noisy);
            table.noiseless[i][b] = std::move(g_true);
        }
    });
    return table;
}

}  // namespace cfbeam
