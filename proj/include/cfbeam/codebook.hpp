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
#include <string>
#include <vector>

#include "cfbeam/channel.hpp"
#include "cfbeam/scenario.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

/// Unitary DFT matrix of size n (columns unit norm).
inline CMat dft_matrix(int n) {
    CMat f(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            f(j, k) = s * std::exp(cplx(0.0, -2.0 * kPi * j * k / n));
    return f;
}

/// 2-D DFT codebook for an HxW UPA: Kronecker product of the per-dimension
/// unitary DFTs. Satisfies F^H F = F F^H = I_M.
inline CMat dft_codebook(int H, int W) {
    if (H < 1 || W < 1) throw std::invalid_argument("dft_codebook: H and W must be >= 1");
    const CMat fh = dft_matrix(H);
    const CMat fw = dft_matrix(W);
    CMat f(H * W, H * W);
    for (int r1 = 0; r1 < H; ++r1)
        for (int c1 = 0; c1 < H; ++c1)
            f.block(r1 * W, c1 * W, W, W) = fh(r1, c1) * fw;
    return f;
}

enum class ProbingKind { expanded_steering, steering, single_antenna_omni };

inline ProbingKind probing_kind_from_string(const std::string& s) {
    if (s == "expanded_steering") return ProbingKind::expanded_steering;
    if (s == "steering") return ProbingKind::steering;
    if (s == "single_antenna_omni") return ProbingKind::single_antenna_omni;
    throw std::invalid_argument("unknown probing beam kind '" + s + "'");
}

inline std::string to_string(ProbingKind k) {
    switch (k) {
        case ProbingKind::expanded_steering: return "expanded_steering";
        case ProbingKind::steering: return "steering";
        default: return "single_antenna_omni";
    }
}

/// Probing beams of one BS (columns, unit norm).
struct ProbingBeamSet {
    CMat beams;  // M x N_W
    ProbingKind kind;
};

/// Steering beam toward (theta, phi) in the BS local frame, unit norm, with
/// an optional horizontal widening: each column w of the UPA gets an extra
/// quadratic phase c*p*(2w-W+1)^2/(2W); no vertical expansion.
inline CVec widened_steering(double theta, double phi, int H, int W, double d_over_lambda,
                             double c, int p) {
    CVec g = steering_vector(theta, phi, H, W, d_over_lambda);
    if (c != 0.0) {
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                const double x = 2.0 * w - W + 1.0;
                g[h * W + w] *= std::exp(cplx(0.0, c * p * x * x / (2.0 * W)));
            }
    }
    g /= g.norm();
    return g;
}

/// Probing beams for every BS. For N_W > 1 the aim points fan out along the
/// region's long axis; single_antenna_omni uses one excited element per beam.
inline std::vector<ProbingBeamSet> make_probing_beams(const ScenarioConfig& cfg, ProbingKind kind,
                                                      Vec3 aim_point,
                                                      double expansion_c = 0.9,
                                                      int expansion_p = 2) {
    const int M = cfg.num_antennas();
    const int NW = cfg.num_probing_beams;
    if (NW > M)
        throw std::invalid_argument("make_probing_beams: N_W = " + std::to_string(NW) +
                                    " exceeds M = " + std::to_string(M));
    const bool long_axis_y = (cfg.region.y_max - cfg.region.y_min) >=
                             (cfg.region.x_max - cfg.region.x_min);
    std::vector<Vec3> aims(NW, aim_point);
    if (NW > 1) {
        const double lo = long_axis_y ? cfg.region.y_min : cfg.region.x_min;
        const double hi = long_axis_y ? cfg.region.y_max : cfg.region.x_max;
        for (int i = 0; i < NW; ++i) {
            const double t = lo + (hi - lo) * (i + 0.5) / NW;
            if (long_axis_y)
                aims[i].y() = t;
            else
                aims[i].x() = t;
        }
    }

    std::vector<ProbingBeamSet> out(cfg.num_bs);
    const Vec3 center = cfg.region.center();
    for (int b = 0; b < cfg.num_bs; ++b) {
        const Vec3& bs = cfg.bs_positions[b];
        const Vec3 d = center - bs;
        const double bore = std::atan2(d.y(), d.x());
        CMat beams(M, NW);
        for (int i = 0; i < NW; ++i) {
            if (kind == ProbingKind::single_antenna_omni) {
                CVec g = CVec::Zero(M);
                g[i] = 1.0;
                beams.col(i) = g;
            } else {
                const LocalAngles a = local_angles(bs, bore, aims[i]);
                const double c = (kind == ProbingKind::expanded_steering) ? expansion_c : 0.0;
                beams.col(i) = widened_steering(a.azimuth, a.elevation, cfg.upa_rows,
                                                cfg.upa_cols, cfg.antenna_spacing_over_lambda, c,
                                                expansion_p);
            }
        }
        out[b] = {beams, kind};
    }
    return out;
}

inline std::vector<ProbingBeamSet> make_probing_beams(const ScenarioConfig& cfg,
                                                      ProbingKind kind) {
    return make_probing_beams(cfg, kind, cfg.region.center());
}

}  // namespace cfbeam
