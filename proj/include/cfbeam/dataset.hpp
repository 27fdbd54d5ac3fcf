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

#include "cfbeam/measurement.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

/// Narrow-beam equivalent rate of one beam from grouped responses:
/// sum over groups of |group| * log2(1 + P_bar * |r|^2 / sigma^2).
inline double narrow_beam_rate(const std::vector<cplx>& responses,
                               const std::vector<int>& group_sizes, const Vec& p_bar_per_group,
                               double noise_var) {
    if (responses.size() != group_sizes.size() ||
        static_cast<Eigen::Index>(responses.size()) != p_bar_per_group.size())
        throw std::invalid_argument("narrow_beam_rate: length mismatch");
    if (noise_var <= 0.0) throw std::invalid_argument("narrow_beam_rate: noise_var must be > 0");
    double rate = 0.0;
    for (std::size_t g = 0; g < responses.size(); ++g) {
        if (group_sizes[g] <= 0) throw std::invalid_argument("narrow_beam_rate: empty group");
        const double snr = p_bar_per_group[g] * std::norm(responses[g]) / noise_var;
        rate += group_sizes[g] * std::log2(1.0 + snr);
    }
    return rate;
}

inline double narrow_beam_rate(const std::vector<cplx>& responses,
                               const std::vector<int>& group_sizes, double p_bar,
                               double noise_var) {
    return narrow_beam_rate(responses, group_sizes,
                            Vec::Constant(static_cast<Eigen::Index>(responses.size()), p_bar),
                            noise_var);
}

/// First-max index of a rate vector; ties break to the lowest index.
inline int argmax_first(const Eigen::Ref<const Vec>& v) {
    if (v.size() == 0) throw std::invalid_argument("argmax_first: empty input");
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// One-hot coding of a rate vector (single hot entry at the first maximum).
inline Vec one_hot(const Eigen::Ref<const Vec>& rates) {
    Vec y = Vec::Zero(rates.size());
    y[argmax_first(rates)] = 1.0;
    return y;
}

enum class Side { user, bs };

/// Training/testing samples in both feature layouts.
///
/// User-side rows are ordered (probe i, then BS b, then group k) with
/// (|r|, angle r) pairs; BS-side rows are the BS-local slice ordered
/// (probe i, then group k). Concatenating the BS-side blocks in BS order
/// permutes the user-side vector.
struct Dataset {
    Mat x_user;              // N x (2 * N_W * B * Kbar)
    std::vector<Mat> x_bs;   // per BS: N x (2 * N_W * Kbar)
    Mat rates;               // N x (B*M), measured (noisy) narrow-beam rates
    Mat rates_true;          // N x (B*M), noiseless; empty after CSV import
    Mat labels;              // N x (B*M), one-hot per BS block
    Eigen::MatrixXi label_index;  // N x B
    Eigen::MatrixXi genie_index;  // N x B, argmax of noiseless rates
    std::vector<int> scene_index;
    std::string owner = "all";
    std::string split_tag = "all";
    int num_bs = 0, num_beams = 0, num_probing = 0, num_groups = 0;

    int size() const { return static_cast<int>(x_user.rows()); }
    bool has_genie() const { return rates_true.size() > 0; }
};

/// Map (probe column i, BS b, group k, component c) to the user-side index.
inline int user_feature_index(int i, int b, int k, int c, int num_bs, int num_groups) {
    return ((i * num_bs + b) * num_groups + k) * 2 + c;
}

/// Same measurement in the BS-side layout: offset of BS b's block plus the
/// BS-local index (probe i, group k, component c).
inline int bs_feature_index(int i, int k, int c, int num_groups) {
    return (i * num_groups + k) * 2 + c;
}

/// The fixed permutation relating the two layouts: entry j of the
/// concatenated BS-side vector equals entry perm[j] of the user-side vector.
inline std::vector<int> bs_to_user_permutation(int num_probing, int num_bs, int num_groups) {
    std::vector<int> perm;
    perm.reserve(2 * num_probing * num_bs * num_groups);
    for (int b = 0; b < num_bs; ++b)
        for (int i = 0; i < num_probing; ++i)
            for (int k = 0; k < num_groups; ++k)
                for (int c = 0; c < 2; ++c)
                    perm.push_back(user_feature_index(i, b, k, c, num_bs, num_groups));
    return perm;
}

/// Phase of a complex response as a raw feature: principal value, with the
/// phase of exact zero defined as 0.
inline double phase_feature(cplx r) { return (r == cplx(0.0, 0.0)) ? 0.0 : std::arg(r); }

/// Assemble samples from a measured beam-response table. Both layouts are
/// filled from the same measurements.
inline Dataset build_dataset(const BeamResponseTable& table, const ScenarioConfig& cfg) {
    const int n = static_cast<int>(table.noisy.size());
    if (n == 0) throw std::invalid_argument("build_dataset: empty response table");
    const int B = cfg.num_bs;
    const int M = table.num_narrow;
    const int NW = table.num_probing;
    const int Kb = cfg.groups_per_user;
    const int gs = cfg.group_size();
    const double p_bar = cfg.data_power_per_subcarrier();
    const double nv = cfg.noise_var_w;

    Dataset ds;
    ds.num_bs = B;
    ds.num_beams = M;
    ds.num_probing = NW;
    ds.num_groups = Kb;
    ds.x_user.resize(n, 2 * NW * B * Kb);
    ds.x_bs.assign(B, Mat(n, 2 * NW * Kb));
    ds.rates.resize(n, B * M);
    ds.rates_true.resize(n, B * M);
    ds.labels = Mat::Zero(n, B * M);
    ds.label_index.resize(n, B);
    ds.genie_index.resize(n, B);
    ds.scene_index.resize(n);

    parallel_for(n, [&](int s) {
        ds.scene_index[s] = s;
        for (int b = 0; b < B; ++b) {
            const CMat& noisy = table.noisy[s][b];
            const CMat& exact = table.noiseless[s][b];
            for (int i = 0; i < NW; ++i)
                for (int k = 0; k < Kb; ++k) {
                    const cplx r = noisy(i, k);
                    const double mag = std::abs(r);
                    const double ph = phase_feature(r);
                    ds.x_user(s, user_feature_index(i, b, k, 0, B, Kb)) = mag;
                    ds.x_user(s, user_feature_index(i, b, k, 1, B, Kb)) = ph;
                    ds.x_bs[b](s, bs_feature_index(i, k, 0, Kb)) = mag;
                    ds.x_bs[b](s, bs_feature_index(i, k, 1, Kb)) = ph;
                }
            for (int m = 0; m < M; ++m) {
                double rate_noisy = 0.0, rate_true = 0.0;
                for (int k = 0; k < Kb; ++k) {
                    rate_noisy +=
                        gs * std::log2(1.0 + p_bar * std::norm(noisy(NW + m, k)) / nv);
                    rate_true +=
                        gs * std::log2(1.0 + p_bar * std::norm(exact(NW + m, k)) / nv);
                }
                ds.rates(s, b * M + m) = rate_noisy;
                ds.rates_true(s, b * M + m) = rate_true;
            }
            const auto rates_row = ds.rates.row(s).segment(b * M, M);
            const auto true_row = ds.rates_true.row(s).segment(b * M, M);
            const int hot = cfg.noisy_labels ? argmax_first(rates_row.transpose())
                                             : argmax_first(true_row.transpose());
            ds.label_index(s, b) = hot;
            ds.genie_index(s, b) = argmax_first(true_row.transpose());
            ds.labels(s, b * M + hot) = 1.0;
        }
    });
    return ds;
}

/// Measure and assemble in one step. User-side samples come from downlink
/// training, BS-side samples from uplink training.
inline Dataset build_samples(const Scene& scene, const ScenarioConfig& cfg,
                             const std::vector<ProbingBeamSet>& probes, const CMat& codebook,
                             Side side, const SplitRng& rng) {
    if (scene.realizations.empty()) throw std::invalid_argument("build_samples: empty scene");
    const TrainingDirection dir =
        (side == Side::user) ? TrainingDirection::downlink : TrainingDirection::uplink;
    const BeamResponseTable table = build_response_table(scene, cfg, probes, codebook, dir, rng);
    Dataset ds = build_dataset(table, cfg);
    ds.owner = (side == Side::user) ? "user" : "bs";
    return ds;
}

/// Row subset (copies the selected rows).
inline Dataset subset(const Dataset& ds, const std::vector<int>& rows) {
    Dataset out;
    out.num_bs = ds.num_bs;
    out.num_beams = ds.num_beams;
    out.num_probing = ds.num_probing;
    out.num_groups = ds.num_groups;
    out.owner = ds.owner;
    const int n = static_cast<int>(rows.size());
    out.x_user.resize(n, ds.x_user.cols());
    out.x_bs.assign(ds.x_bs.size(), Mat(n, ds.x_bs.empty() ? 0 : ds.x_bs[0].cols()));
    out.rates.resize(n, ds.rates.cols());
    if (ds.has_genie()) out.rates_true.resize(n, ds.rates_true.cols());
    out.labels.resize(n, ds.labels.cols());
    out.label_index.resize(n, ds.label_index.cols());
    out.genie_index.resize(n, ds.genie_index.cols());
    out.scene_index.resize(n);
    for (int r = 0; r < n; ++r) {
        const int src = rows[r];
        out.x_user.row(r) = ds.x_user.row(src);
        for (std::size_t b = 0; b < ds.x_bs.size(); ++b) out.x_bs[b].row(r) = ds.x_bs[b].row(src);
        out.rates.row(r) = ds.rates.row(src);
        if (ds.has_genie()) out.rates_true.row(r) = ds.rates_true.row(src);
        out.labels.row(r) = ds.labels.row(src);
        out.label_index.row(r) = ds.label_index.row(src);
        out.genie_index.row(r) = ds.genie_index.row(src);
        out.scene_index[r] = ds.scene_index[src];
    }
    return out;
}

/// Deterministic shuffled split. Train gets round(frac_train * N) samples.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double frac_train,
                                                    std::uint64_t seed) {
    if (!(frac_train > 0.0 && frac_train < 1.0))
        throw std::invalid_argument("split_train_test: frac_train must be in (0, 1)");
    const int n = ds.size();
    const int n_train = static_cast<int>(std::llround(frac_train * n));
    if (n_train < 1 || n_train >= n)
        throw std::invalid_argument("split_train_test: dataset too small for the requested split");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitRng rng = SplitRng(seed).split("train-test-split");
    for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<int>(rng.uniform_index(i + 1))]);
    Dataset train = subset(ds, {order.begin(), order.begin() + n_train});
    Dataset test = subset(ds, {order.begin() + n_train, order.end()});
    train.split_tag = "train";
    test.split_tag = "test";
    return {std::move(train), std::move(test)};
}

/// Divide a dataset into U nearly equal parts (first parts get the extras).
inline std::vector<Dataset> partition_users(const Dataset& ds, int num_users) {
    if (num_users < 1) throw std::invalid_argument("partition_users: need >= 1 users");
    if (ds.size() < num_users)
        throw std::invalid_argument("partition_users: fewer samples than users");
    std::vector<Dataset> parts;
    parts.reserve(num_users);
    const int base = ds.size() / num_users;
    const int extra = ds.size() % num_users;
    int start = 0;
    for (int u = 0; u < num_users; ++u) {
        const int len = base + (u < extra ? 1 : 0);
        std::vector<int> rows(len);
        std::iota(rows.begin(), rows.end(), start);
        start += len;
        parts.push_back(subset(ds, rows));
        parts.back().owner = "user" + std::to_string(u);
        parts.back().split_tag = ds.split_tag;
    }
    return parts;
}

/// Per-feature affine normalizer fitted on a training split. Zero-variance
/// features keep unit scale.
struct Normalizer {
    Vec mean;
    Vec inv_std;

    static Normalizer fit(const Mat& x) {
        Normalizer n;
        n.mean = x.colwise().mean();
        Vec var = ((x.rowwise() - n.mean.transpose()).array().square().colwise().sum() /
                   static_cast<double>(x.rows()))
                      .transpose();
        n.inv_std.resize(var.size());
        for (int i = 0; i < var.size(); ++i) {
            const double sd = std::sqrt(var[i]);
            n.inv_std[i] = (sd > 1e-12) ? 1.0 / sd : 1.0;
        }
        return n;
    }

    Mat apply(const Mat& x) const {
        return (x.rowwise() - mean.transpose()).array().rowwise() *
               inv_std.transpose().array();
    }
    RowVec apply(const RowVec& x) const {
        return (x - mean.transpose()).cwiseProduct(inv_std.transpose());
    }
};

// ---- dataset CSV interchange ---------------------------------------------
// header: sample_id,owner,kind,index,value ; kind in {feat, rate, label}.
// Values are printed with 17 significant digits, so a round trip is lossless.

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    out << "sample_id,owner,kind,index,value\n";
    char buf[256];
    auto emit = [&](int s, const char* kind, int idx, double v) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%s,%d,%.17g\n", s, ds.owner.c_str(), kind, idx, v);
        out << buf;
    };
    for (int s = 0; s < ds.size(); ++s) {
        for (int j = 0; j < ds.x_user.cols(); ++j) emit(s, "feat", j, ds.x_user(s, j));
        for (int j = 0; j < ds.rates.cols(); ++j) emit(s, "rate", j, ds.rates(s, j));
        for (int j = 0; j < ds.labels.cols(); ++j) emit(s, "label", j, ds.labels(s, j));
    }
}

/// Rebuild a dataset from its CSV export. BS-side views are reconstructed
/// through the layout permutation; noiseless rates are not part of the
/// format, so genie indices are unavailable on imported data.
inline Dataset read_dataset_csv(const std::string& path, int num_bs, int num_beams,
                                int num_probing, int num_groups) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "sample_id,owner,kind,index,value")
        throw std::runtime_error("read_dataset_csv: " + path + ": bad header");
    struct Row {
        int s;
        std::string owner, kind;
        int idx;
        double v;
    };
    std::vector<Row> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        Row r;
        std::string tok;
        try {
            std::getline(ss, tok, ',');
            r.s = std::stoi(tok);
            std::getline(ss, r.owner, ',');
            std::getline(ss, r.kind, ',');
            std::getline(ss, tok, ',');
            r.idx = std::stoi(tok);
            std::getline(ss, tok, ',');
            r.v = std::stod(tok);
        } catch (...) {
            throw std::runtime_error("read_dataset_csv: " + path + ":" +
                                     std::to_string(line_no) + ": malformed row");
        }
        if (r.kind != "feat" && r.kind != "rate" && r.kind != "label")
            throw std::runtime_error("read_dataset_csv: " + path + ":" +
                                     std::to_string(line_no) + ": unknown kind '" + r.kind + "'");
        rows.push_back(std::move(r));
    }
    int n = 0;
    for (const auto& r : rows) n = std::max(n, r.s + 1);
    if (n == 0) throw std::runtime_error("read_dataset_csv: " + path + ": no data rows");

    Dataset ds;
    ds.num_bs = num_bs;
    ds.num_beams = num_beams;
    ds.num_probing = num_probing;
    ds.num_groups = num_groups;
    ds.x_user.setZero(n, 2 * num_probing * num_bs * num_groups);
    ds.rates.setZero(n, num_bs * num_beams);
    ds.labels.setZero(n, num_bs * num_beams);
    for (const auto& r : rows) {
        ds.owner = r.owner;
        if (r.kind == "feat")
            ds.x_user(r.s, r.idx) = r.v;
        else if (r.kind == "rate")
            ds.rates(r.s, r.idx) = r.v;
        else
            ds.labels(r.s, r.idx) = r.v;
    }
    ds.x_bs.assign(num_bs, Mat(n, 2 * num_probing * num_groups));
    for (int b = 0; b < num_bs; ++b)
        for (int i = 0; i < num_probing; ++i)
            for (int k = 0; k < num_groups; ++k)
                for (int c = 0; c < 2; ++c)
                    ds.x_bs[b].col(bs_feature_index(i, k, c, num_groups)) =
                        ds.x_user.col(user_feature_index(i, b, k, c, num_bs, num_groups));
    ds.label_index.resize(n, num_bs);
    ds.genie_index = Eigen::MatrixXi::Constant(n, num_bs, -1);
    ds.scene_index.resize(n);
    for (int s = 0; s < n; ++s) {
        ds.scene_index[s] = s;
        for (int b = 0; b < num_bs; ++b)
            ds.label_index(s, b) =
                argmax_first(ds.labels.row(s).segment(b * num_beams, num_beams).transpose());
    }
    return ds;
}

}  // namespace cfbeam
