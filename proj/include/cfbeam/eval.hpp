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
//
// Effective-rate accounting with per-scheme training overhead, the
// exhaustive-search and genie baselines, and BA success measurement.

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/channel.hpp"
#include "cfbeam/dataset.hpp"
#include "cfbeam/rng.hpp"
#include "cfbeam/threading.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

/// Effective downlink rate (bit/s) of one user:
/// (1 - T_r/T) (B_w/K) sum_k log2(1 + P_uk/sigma^2 sum_b |h_{b,k}^H f_b|^2).
/// T_r > T clamps the time factor to zero.
inline double effective_rate(const std::vector<CMat>& h_per_bs, const std::vector<CVec>& beams,
                             double p_uk, double sigma2, double t_r_ms, double t_ms,
                             double bandwidth_hz, int num_subcarriers_total) {
    if (sigma2 <= 0.0) throw std::invalid_argument("effective_rate: sigma^2 must be > 0");
    if (h_per_bs.size() != beams.size())
        throw std::invalid_argument("effective_rate: one beam per BS required");
    const double factor = std::max(0.0, 1.0 - t_r_ms / t_ms);
    if (h_per_bs.empty()) return 0.0;
    const Eigen::Index k_u = h_per_bs[0].cols();
    Vec power = Vec::Zero(k_u);
    for (std::size_t b = 0; b < h_per_bs.size(); ++b)
        power += (h_per_bs[b].adjoint() * beams[b]).cwiseAbs2();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < k_u; ++k) sum += std::log2(1.0 + p_uk * power[k] / sigma2);
    return factor * bandwidth_hz / num_subcarriers_total * sum;
}

/// Beam-training time per scheme, in ms.
inline double t_r_user_side_bl(const ScenarioConfig& c) {
    return c.num_bs * c.num_probing_beams * c.beam_time_ms + c.num_bs * c.beam_time_ms;
}
inline double t_r_bs_side_bl(const ScenarioConfig& c) {
    return (c.num_probing_beams + 1) * c.beam_time_ms;
}
inline double t_r_exhaustive_downlink(const ScenarioConfig& c) {
    return c.num_bs * c.num_antennas() * c.beam_time_ms;
}
inline double t_r_exhaustive_uplink(const ScenarioConfig& c) {
    return c.num_antennas() * c.beam_time_ms;
}

/// Per-BS argmax of the measured narrow-beam rates: the exhaustive-search
/// baseline answer for one sample row.
inline std::vector<int> exhaustive_search(const Dataset& ds, int row) {
    std::vector<int> idx(ds.num_bs);
    for (int b = 0; b < ds.num_bs; ++b) {
        if (ds.rates.cols() != ds.num_bs * ds.num_beams)
            throw std::invalid_argument("exhaustive_search: incomplete rate table");
        idx[b] = argmax_first(
            ds.rates.row(row).segment(b * ds.num_beams, ds.num_beams).transpose());
    }
    return idx;
}

/// Fraction of test points where every BS index matches the genie index.
inline double ba_success_rate(const Eigen::MatrixXi& predicted, const Eigen::MatrixXi& genie) {
    if (predicted.rows() != genie.rows() || predicted.cols() != genie.cols())
        throw std::invalid_argument("ba_success_rate: shape mismatch");
    if (predicted.rows() == 0) throw std::invalid_argument("ba_success_rate: empty input");
    int hits = 0;
    for (Eigen::Index r = 0; r < predicted.rows(); ++r)
        if ((predicted.row(r).array() == genie.row(r).array()).all()) ++hits;
    return static_cast<double>(hits) / predicted.rows();
}

/// Fraction of (point, BS) pairs with the genie index: per-beam top-1 accuracy.
inline double top1_accuracy(const Eigen::MatrixXi& predicted, const Eigen::MatrixXi& genie) {
    if (predicted.rows() != genie.rows() || predicted.cols() != genie.cols())
        throw std::invalid_argument("top1_accuracy: shape mismatch");
    return static_cast<double>((predicted.array() == genie.array()).count()) /
           static_cast<double>(predicted.size());
}

/// Precomputed true channels of a set of evaluation points; rates for any
/// beam choice come from these, independent of any measurement noise.
class RateEvaluator {
  public:
    RateEvaluator(const Scene& scene, const ScenarioConfig& cfg, const CMat& codebook,
                  std::vector<int> realization_rows)
        : cfg_(cfg), codebook_(codebook), rows_(std::move(realization_rows)) {
        const Vec freqs = cfg.subcarrier_freqs();
        h_.resize(rows_.size());
        parallel_for(static_cast<int>(rows_.size()), [&](int i) {
            h_[i].resize(cfg.num_bs);
            for (int b = 0; b < cfg.num_bs; ++b)
                h_[i][b] = channel_matrix(scene.realizations[rows_[i]].links[b], cfg_, freqs);
        });
    }

    int size() const { return static_cast<int>(rows_.size()); }

    /// Spectral efficiency of one point, averaged over subcarriers (no time
    /// factor): (1/K_u) sum_k log2(1 + P_uk/sigma^2 sum_b |h_k^H f_{i_b}|^2).
    double subcarrier_avg_se(int point, const std::vector<int>& beam_idx) const {
        const double p = cfg_.data_power_per_subcarrier();
        Vec power = Vec::Zero(cfg_.subcarriers_per_user);
        for (int b = 0; b < cfg_.num_bs; ++b)
            power += (h_[point][b].adjoint() * codebook_.col(beam_idx[b])).cwiseAbs2();
        double sum = 0.0;
        for (int k = 0; k < cfg_.subcarriers_per_user; ++k)
            sum += std::log2(1.0 + p * power[k] / cfg_.noise_var_w);
        return sum / cfg_.subcarriers_per_user;
    }

    /// Per-point SE for a full index matrix (rows aligned with this
    /// evaluator's points).
    Vec subcarrier_avg_se(const Eigen::MatrixXi& indices) const {
        if (indices.rows() != size())
            throw std::invalid_argument("subcarrier_avg_se: row count mismatch");
        Vec out(size());
        parallel_for(size(), [&](int i) {
            std::vector<int> idx(cfg_.num_bs);
            for (int b = 0; b < cfg_.num_bs; ++b) idx[b] = indices(i, b);
            out[i] = subcarrier_avg_se(i, idx);
        });
        return out;
    }

    /// Effective rate (bit/s) of one point including the training-time factor.
    double effective_rate_bps(int point, const std::vector<int>& beam_idx, double t_r_ms) const {
        const double factor = std::max(0.0, 1.0 - t_r_ms / cfg_.tracking_period_ms);
        return factor * cfg_.bandwidth_hz / cfg_.num_subcarriers *
               subcarrier_avg_se(point, beam_idx) * cfg_.subcarriers_per_user;
    }

    const ScenarioConfig& config() const { return cfg_; }

  private:
    ScenarioConfig cfg_;
    CMat codebook_;
    std::vector<int> rows_;
    std::vector<std::vector<CMat>> h_;
};

/// SE_ave_eff: mean over users/points of subcarrier-averaged spectral
/// efficiency, scaled by the scheme's (1 - T_r/T).
inline double se_ave_eff(const Vec& per_point_se, double t_r_ms, double t_ms) {
    if (per_point_se.size() == 0) throw std::invalid_argument("se_ave_eff: empty user set");
    return std::max(0.0, 1.0 - t_r_ms / t_ms) * per_point_se.mean();
}

struct SchemeResult {
    std::string scheme;
    int n_train = 0;
    std::uint64_t seed = 0;
    double se_ave_eff = 0.0;
    double ba_success = 0.0;
    double top1_acc = 0.0;
    std::int64_t overhead_reals = 0;
    double t_r_ms = 0.0;
    Eigen::MatrixXi indices;  // per test point per BS
    Vec per_point_se;         // subcarrier-averaged, before the time factor
};

inline void write_results_csv(const std::vector<SchemeResult>& results, const std::string& path,
                              const std::string& sweep_param = "",
                              const std::vector<double>& sweep_values = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
    out << "scheme,n_train,seed,se_ave_eff,ba_success,overhead_reals,T_r_ms";
    if (!sweep_param.empty()) out << ",sweep_param,sweep_value";
    out << '\n';
    char buf[256];
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::snprintf(buf, sizeof(buf), "%s,%d,%llu,%.10g,%.10g,%lld,%.10g", r.scheme.c_str(),
                      r.n_train, static_cast<unsigned long long>(r.seed), r.se_ave_eff,
                      r.ba_success, static_cast<long long>(r.overhead_reals), r.t_r_ms);
        out << buf;
        if (!sweep_param.empty()) {
            std::snprintf(buf, sizeof(buf), ",%s,%.10g", sweep_param.c_str(), sweep_values[i]);
            out << buf;
        }
        out << '\n';
    }
}

/// 5th percentile of the bootstrap distribution of the mean of `diffs`.
/// "A >= B with 95% confidence" holds when this is >= 0; exact ties give 0.
inline double paired_bootstrap_lower(const Vec& diffs, int resamples, SplitRng& rng,
                                     double quantile = 0.05) {
    const int n = static_cast<int>(diffs.size());
    if (n == 0) throw std::invalid_argument("paired_bootstrap_lower: empty sample");
    std::vector<double> means(resamples);
    for (int r = 0; r < resamples; ++r) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += diffs[static_cast<int>(rng.uniform_index(n))];
        means[r] = acc / n;
    }
    std::sort(means.begin(), means.end());
    const int pos = std::min(resamples - 1, static_cast<int>(quantile * resamples));
    return means[pos];
}

}  // namespace cfbeam
