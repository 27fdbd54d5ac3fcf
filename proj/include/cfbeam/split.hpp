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
// BS-side collaborative training: split-feature (vertical) distributed
// ridge regression coordinated by a CU, with maximum-value sparsification
// of every fronthaul message and online score fusion.

#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/bl.hpp"
#include "cfbeam/transport.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

/// Per-row top-N_b sparsification of a transferred matrix: only the N_b
/// largest-|value| entries of each row travel, as (index, value) pairs with
/// strictly increasing indices. N_b = O reproduces the matrix exactly.
struct MVSMessage {
    int n_rows = 0;
    int n_cols = 0;
    int budget = 0;                               // N_b
    std::vector<std::vector<SparseEntry>> rows;   // per row, index-ascending

    std::int64_t reals_transferred() const {
        return 2ll * budget * n_rows;  // value + index per kept element
    }
};

inline MVSMessage mvs_compress(const Mat& m, int budget) {
    const int rows = static_cast<int>(m.rows());
    const int cols = static_cast<int>(m.cols());
    if (budget < 1 || budget > cols)
        throw std::invalid_argument("mvs_compress: budget must be in [1, cols]");
    MVSMessage msg;
    msg.n_rows = rows;
    msg.n_cols = cols;
    msg.budget = budget;
    msg.rows.resize(rows);
    std::vector<int> order(cols);
    for (int r = 0; r < rows; ++r) {
        std::iota(order.begin(), order.end(), 0);
        // largest |value| first; ties keep the lower column index
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(m(r, a)) > std::abs(m(r, b));
        });
        std::vector<int> keep(order.begin(), order.begin() + budget);
        std::sort(keep.begin(), keep.end());
        auto& out = msg.rows[r];
        out.reserve(budget);
        for (const int c : keep)
            out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), m(r, c)});
    }
    return msg;
}

inline Mat mvs_decompress(const MVSMessage& msg) {
    Mat m = Mat::Zero(msg.n_rows, msg.n_cols);
    for (const auto& row : msg.rows)
        for (const auto& e : row) m(e.row, e.index) = e.value;
    return m;
}

struct SplitOptions {
    double rho = 0.1;
    double lambda = 0.001953125;  // 2^-9 (BS-side default)
    int t_max = 5;
    std::optional<int> compress;  // MVS budget N_b; unset sends dense messages
};

/// Per-round state of the vertical-split ADMM. The CU keeps dense V-bar, O
/// and the average AW-bar; each BS keeps its local W_b, its dense local
/// A_b W_b, and the (possibly MVS-degraded) copies received on the downlink.
struct SplitState {
    std::vector<Mat> w;          // per BS: D_b x O
    std::vector<Mat> aw_local;   // per BS: N x O, dense local product
    Mat v_bar, o_dual, aw_bar;   // CU state, N x O
    std::vector<Mat> v_bar_bs, o_bs, aw_bar_bs;  // BS-held downlink copies
    int round = 0;
};

struct SplitResult {
    std::vector<Mat> w;
    std::vector<double> objective_per_round;
    int rounds_run = 0;
};

/// Objective of the split problem: 1/2 ||sum_b A_b W_b - Y||_F^2
/// + sum_b lambda/2 ||W_b||_F^2.
inline double split_objective(const std::vector<const Mat*>& a, const std::vector<Mat>& w,
                              const Mat& y, double lambda) {
    Mat fit = Mat::Zero(y.rows(), y.cols());
    double reg = 0.0;
    for (std::size_t b = 0; b < a.size(); ++b) {
        fit += (*a[b]) * w[b];
        reg += 0.5 * lambda * w[b].squaredNorm();
    }
    return 0.5 * (fit - y).squaredNorm() + reg;
}

namespace detail {
/// Transmit a matrix through the fronthaul, applying MVS when a budget is
/// set. Compression touches only the transmitted copy; the sender's state
/// stays dense. Returns what the receiver reconstructs.
inline Mat fronthaul_send(const Mat& m, const std::optional<int>& budget, int round,
                          const std::string& from, const std::string& to,
                          const std::string& direction, OverheadLedger* ledger,
                          std::vector<FronthaulRecord>* trace) {
    Mat received;
    std::int64_t reals;
    int tag = 0;
    if (budget) {
        const MVSMessage msg = mvs_compress(m, *budget);
        reals = msg.reals_transferred();
        tag = *budget;
        received = mvs_decompress(msg);
    } else {
        reals = static_cast<std::int64_t>(m.size());
        received = m;
    }
    if (ledger) ledger->record(from, to, reals);
    if (trace) trace->push_back({round, from, direction, reals, tag});
    return received;
}
}  // namespace detail

/// One synchronous round of the split-ridge ADMM updates:
///   W_b(t)   = rho Q_b^(-1) A_b^T [A_b W_b(t-1) + V-bar - AW-bar - O]
///   AW-bar(t) = (1/B) sum_b A_b W_b(t)            (at the CU)
///   V-bar(t) = (Y + rho AW-bar + rho O)/(B + rho)
///   O(t)     = O + AW-bar - V-bar
/// Uplinks carry A_b W_b(t); downlinks carry (AW-bar, V-bar, O); both pass
/// through MVS when compression is on.
inline void split_round(SplitState& st, const std::vector<const Mat*>& a,
                        const std::vector<Mat>& q_inv, const Mat& y, const SplitOptions& opt,
                        OverheadLedger* ledger = nullptr,
                        std::vector<FronthaulRecord>* trace = nullptr) {
    const int num_bs = static_cast<int>(a.size());
    if (opt.compress && (*opt.compress < 1 || *opt.compress > y.cols()))
        throw std::invalid_argument("split_round: compression budget outside [1, O]");
    const int t = st.round + 1;
    std::vector<Mat> uplinks(num_bs);
    for (int b = 0; b < num_bs; ++b) {
        const std::string bs_id = "bs" + std::to_string(b);
        st.w[b] = opt.rho * (q_inv[b] * (a[b]->transpose() *
                                         (st.aw_local[b] + st.v_bar_bs[b] - st.aw_bar_bs[b] -
                                          st.o_bs[b])));
        st.aw_local[b] = (*a[b]) * st.w[b];
        uplinks[b] = detail::fronthaul_send(st.aw_local[b], opt.compress, t, bs_id, "cu",
                                            "uplink", ledger, trace);
    }
    st.aw_bar = uplinks[0];
    for (int b = 1; b < num_bs; ++b) st.aw_bar += uplinks[b];
    st.aw_bar /= static_cast<double>(num_bs);
    st.v_bar = (y + opt.rho * st.aw_bar + opt.rho * st.o_dual) / (num_bs + opt.rho);
    st.o_dual += st.aw_bar - st.v_bar;
    for (int b = 0; b < num_bs; ++b) {
        const std::string bs_id = "bs" + std::to_string(b);
        st.aw_bar_bs[b] = detail::fronthaul_send(st.aw_bar, opt.compress, t, "cu", bs_id,
                                                 "downlink", ledger, trace);
        st.v_bar_bs[b] = detail::fronthaul_send(st.v_bar, opt.compress, t, "cu", bs_id,
                                                "downlink", ledger, trace);
        st.o_bs[b] = detail::fronthaul_send(st.o_dual, opt.compress, t, "cu", bs_id,
                                            "downlink", ledger, trace);
    }
    if (!st.v_bar.allFinite())
        throw std::runtime_error("split_round: non-finite values propagated");
    ++st.round;
}

/// BS-side collaborative training: zero initialization,
/// cached Q_b^(-1) = (rho A_b^T A_b + lambda I)^(-1), then t_max compressed
/// rounds. Label upload (N M reals per BS) is charged to the ledger once.
inline SplitResult run_split_training(const std::vector<const Mat*>& a, const Mat& y,
                              const SplitOptions& opt, OverheadLedger* ledger = nullptr,
                              std::vector<FronthaulRecord>* trace = nullptr) {
    const int num_bs = static_cast<int>(a.size());
    if (num_bs == 0) throw std::invalid_argument("run_split_training: need at least one BS");
    const Eigen::Index n = y.rows();
    const Eigen::Index o = y.cols();
    for (int b = 0; b < num_bs; ++b)
        if (a[b]->rows() != n)
            throw std::invalid_argument("run_split_training: sample count mismatch at BS " +
                                        std::to_string(b));

    if (ledger) {
        // each BS uploads its own M-column label block once: N*M reals
        const std::int64_t label_reals = n * (o / num_bs);
        for (int b = 0; b < num_bs; ++b)
            ledger->record("bs" + std::to_string(b), "cu", label_reals);
    }

    std::vector<Mat> q_inv(num_bs);
    for (int b = 0; b < num_bs; ++b) {
        Mat q = opt.rho * (a[b]->transpose() * (*a[b]));
        q.diagonal().array() += opt.lambda;
        q_inv[b] = Eigen::LLT<Mat>(q).solve(Mat::Identity(q.rows(), q.cols()));
    }

    SplitState st;
    st.w.resize(num_bs);
    st.aw_local.assign(num_bs, Mat::Zero(n, o));
    for (int b = 0; b < num_bs; ++b) st.w[b] = Mat::Zero(a[b]->cols(), o);
    st.v_bar = st.o_dual = st.aw_bar = Mat::Zero(n, o);
    st.v_bar_bs.assign(num_bs, Mat::Zero(n, o));
    st.o_bs.assign(num_bs, Mat::Zero(n, o));
    st.aw_bar_bs.assign(num_bs, Mat::Zero(n, o));

    SplitResult res;
    res.objective_per_round.reserve(opt.t_max);
    for (int t = 0; t < opt.t_max; ++t) {
        split_round(st, a, q_inv, y, opt, ledger, trace);
        res.objective_per_round.push_back(split_objective(a, st.w, y, opt.lambda));
    }
    res.w = std::move(st.w);
    res.rounds_run = st.round;
    return res;
}

/// Closed-form training overhead per BS: 8 t_max N N_b + N M (the N M term
/// is the one-time label aggregation).
inline std::int64_t overhead_bs_side(std::int64_t n, std::int64_t n_b, std::int64_t m,
                                     std::int64_t t_max) {
    return 8 * t_max * n * n_b + n * m;
}

/// Online fusion at the CU: sum the per-BS local scores, take the first-max
/// index in each BS block, and return each index to its BS. Each BS's report
/// costs B*M uplink reals per prediction.
inline std::vector<int> online_fuse(const std::vector<RowVec>& local_scores, int num_bs,
                                    OverheadLedger* ledger = nullptr) {
    if (static_cast<int>(local_scores.size()) != num_bs)
        throw std::invalid_argument("online_fuse: missing BS report");
    RowVec fused = local_scores[0];
    for (int b = 1; b < num_bs; ++b) {
        if (local_scores[b].size() != fused.size())
            throw std::invalid_argument("online_fuse: report length mismatch");
        fused += local_scores[b];
    }
    if (ledger)
        for (int b = 0; b < num_bs; ++b)
            ledger->record("bs" + std::to_string(b), "cu", fused.size(), Phase::online);
    return block_argmax(fused, num_bs);
}

}  // namespace cfbeam
