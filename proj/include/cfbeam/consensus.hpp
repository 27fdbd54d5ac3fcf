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
// User-side collaborative training: ADMM global-variable consensus over
// per-user datasets, Woodbury-style incremental cache updates for new
// samples and added enhancement nodes, and the exact communication ledger.

#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/bl.hpp"
#include "cfbeam/transport.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

enum class ExchangeMode { d2d, bs_relayed };

struct ConsensusOptions {
    double rho = 0.1;
    double lambda = 0.125;
    int t_max = 10;
    double early_exit_tol = 0.0;  // > 0 enables the primal-residual early exit
    ExchangeMode mode = ExchangeMode::d2d;
};

/// Per-round ADMM consensus variables.
struct ConsensusState {
    std::vector<Mat> w;  // W_u
    std::vector<Mat> o;  // dual O_u
    Mat w0;              // shared model
    int round = 0;
};

struct ConsensusTraceRow {
    int round;
    int user;
    double primal_residual;
    double dual_residual;
    double objective;
};

inline void write_consensus_trace(const std::vector<ConsensusTraceRow>& rows,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_consensus_trace: cannot open " + path);
    out << "round,user,primal_residual,dual_residual,obj\n";
    char buf[192];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.10g,%.10g,%.10g\n", r.round, r.user,
                      r.primal_residual, r.dual_residual, r.objective);
        out << buf;
    }
}

/// Closed-form communication overhead per user (reals transferred):
/// 2 t_max D O (U-1) over D2D, 2 t_max D O (U+1)/U when the BS side relays.
inline double overhead_user_side(ExchangeMode mode, int num_users, int d, int o, int t_max) {
    const double base = 2.0 * t_max * static_cast<double>(d) * o;
    if (mode == ExchangeMode::d2d) return num_users > 1 ? base * (num_users - 1) : 0.0;
    return base * (num_users + 1) / num_users;
}

namespace detail {
inline void ledger_round(OverheadLedger* ledger, ExchangeMode mode, int num_users,
                         std::int64_t reals_per_user) {
    if (!ledger || num_users <= 1) return;
    std::vector<std::string> ids(num_users);
    for (int u = 0; u < num_users; ++u) ids[u] = "user" + std::to_string(u);
    if (mode == ExchangeMode::d2d) {
        for (int u = 0; u < num_users; ++u)
            for (int v = 0; v < num_users; ++v)
                if (v != u) ledger->record(ids[u], ids[v], reals_per_user);
    } else {
        for (int u = 0; u < num_users; ++u) ledger->record(ids[u], "relay", reals_per_user);
        ledger->record_broadcast("relay", ids, reals_per_user);
    }
}
}  // namespace detail

/// One synchronous consensus round on cached Gram inverses:
///   W_u(t) = (A_u^T A_u + rho I)^(-1) [A_u^T Y_u - rho (O_u - W_0)]
///   W_0(t) = U rho / (2 lambda + U rho) (W-bar + O-bar)
///   O_u(t) = O_u + W_u - W_0
/// The reduction over users runs in fixed index order, so results do not
/// depend on scheduling.
inline void consensus_round(ConsensusState& st, const std::vector<Mat>& gram_inv,
                            const std::vector<Mat>& aty, double rho, double lambda) {
    const int num_users = static_cast<int>(gram_inv.size());
    for (int u = 0; u < num_users; ++u)
        st.w[u] = gram_inv[u] * (aty[u] - rho * (st.o[u] - st.w0));
    Mat acc = st.w[0] + st.o[0];
    for (int u = 1; u < num_users; ++u) acc += st.w[u] + st.o[u];
    st.w0 = (rho / (2.0 * lambda + num_users * rho)) * acc;
    for (int u = 0; u < num_users; ++u) st.o[u] += st.w[u] - st.w0;
    if (!st.w0.allFinite())
        throw std::runtime_error("consensus_round: non-finite values propagated");
    ++st.round;
}

struct ConsensusResult {
    std::vector<Mat> w;
    Mat w0;
    int rounds_run = 0;
};

/// Run t_max consensus rounds from the zero start W_0(0) = O_u(0) = 0.
/// `gram_inv[u]` must equal (A_u^T A_u + rho I)^(-1); it is computed once
/// per data change and reused in every round.
inline ConsensusResult run_consensus(const std::vector<const Mat*>& a,
                                     const std::vector<const Mat*>& y,
                                     const std::vector<Mat>& gram_inv,
                                     const ConsensusOptions& opt,
                                     OverheadLedger* ledger = nullptr,
                                     std::vector<ConsensusTraceRow>* trace = nullptr) {
    const int num_users = static_cast<int>(a.size());
    if (num_users == 0 || a.size() != y.size() || gram_inv.size() != a.size())
        throw std::invalid_argument("run_consensus: inconsistent user lists");
    const Eigen::Index d = a[0]->cols();
    const Eigen::Index o = y[0]->cols();
    for (int u = 0; u < num_users; ++u)
        if (a[u]->cols() != d || y[u]->cols() != o || a[u]->rows() != y[u]->rows() ||
            gram_inv[u].rows() != d || gram_inv[u].cols() != d)
            throw std::invalid_argument("run_consensus: dimension mismatch for user " +
                                        std::to_string(u));

    std::vector<Mat> aty(num_users);
    for (int u = 0; u < num_users; ++u) aty[u] = a[u]->transpose() * (*y[u]);

    ConsensusState st;
    st.w.assign(num_users, Mat::Zero(d, o));
    st.o.assign(num_users, Mat::Zero(d, o));
    st.w0 = Mat::Zero(d, o);

    const std::int64_t reals_per_user = 2ll * d * o;
    for (int t = 1; t <= opt.t_max; ++t) {
        const Mat w0_prev = st.w0;
        consensus_round(st, gram_inv, aty, opt.rho, opt.lambda);
        detail::ledger_round(ledger, opt.mode, num_users, reals_per_user);
        double primal_total = 0.0;
        if (trace) {
            const double dual = opt.rho * (st.w0 - w0_prev).norm();
            double obj = opt.lambda * st.w0.squaredNorm();
            std::vector<double> primal(num_users);
            for (int u = 0; u < num_users; ++u) {
                primal[u] = (st.w[u] - st.w0).norm();
                primal_total += primal[u];
                obj += 0.5 * ((*y[u]) - (*a[u]) * st.w[u]).squaredNorm();
            }
            for (int u = 0; u < num_users; ++u)
                trace->push_back({t, u, primal[u], dual, obj});
        } else if (opt.early_exit_tol > 0.0) {
            for (int u = 0; u < num_users; ++u) primal_total += (st.w[u] - st.w0).norm();
        }
        if (opt.early_exit_tol > 0.0 && primal_total < opt.early_exit_tol) break;
    }
    return {std::move(st.w), std::move(st.w0), st.round};
}

/// Convenience overload that builds the per-user Gram inverses at shift rho.
inline ConsensusResult run_consensus(const std::vector<const Mat*>& a,
                                     const std::vector<const Mat*>& y,
                                     const ConsensusOptions& opt,
                                     OverheadLedger* ledger = nullptr,
                                     std::vector<ConsensusTraceRow>* trace = nullptr) {
    std::vector<Mat> gram_inv(a.size());
    for (std::size_t u = 0; u < a.size(); ++u) gram_inv[u] = gram_inverse(*a[u], opt.rho);
    return run_consensus(a, y, gram_inv, opt, ledger, trace);
}

/// New-sample cache update (Woodbury):
///   C_S = C - C A_a^T (I + A_a C A_a^T)^(-1) A_a C
/// turns C = (A^T A + rho I)^(-1) into the inverse for the row-stacked data.
inline Mat inc_update_samples(const Mat& c, const Mat& a_new) {
    if (c.rows() != c.cols()) throw std::invalid_argument("inc_update_samples: C must be square");
    if (a_new.rows() == 0) return c;
    if (a_new.cols() != c.rows())
        throw std::invalid_argument("inc_update_samples: new samples do not match C");
    const Mat t = a_new * c;  // N' x D
    Mat small = t * a_new.transpose();
    small.diagonal().array() += 1.0;
    return c - t.transpose() * Eigen::LLT<Mat>(small).solve(t);
}

/// Added-node cache update (block inverse):
///   C_SE = [ C_S + C_S A_S^T H N H^T A_S C_S   -C_S A_S^T H N ]
///          [          -N H^T A_S C_S                      N   ]
/// with N = (rho I + H^T H - H^T A_S C_S A_S^T H)^(-1). Throws when the
/// N-block is numerically singular, reporting a condition estimate.
inline Mat inc_add_nodes(const Mat& c_s, const Mat& a_s, const Mat& h_new, double rho) {
    const Eigen::Index d = c_s.rows();
    if (c_s.cols() != d) throw std::invalid_argument("inc_add_nodes: C_S must be square");
    if (a_s.cols() != d) throw std::invalid_argument("inc_add_nodes: A_S does not match C_S");
    if (h_new.cols() == 0) return c_s;
    if (h_new.rows() != a_s.rows())
        throw std::invalid_argument("inc_add_nodes: H_a row count does not match A_S");

    const Eigen::Index e = h_new.cols();
    const Mat ath = a_s.transpose() * h_new;       // D x E'
    const Mat cs_ath = c_s * ath;                  // D x E'
    Mat n_inv = h_new.transpose() * h_new - ath.transpose() * cs_ath;
    n_inv.diagonal().array() += rho;

    Eigen::SelfAdjointEigenSolver<Mat> es(n_inv, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e14)
        throw std::runtime_error(
            "inc_add_nodes: N-block numerically singular (condition estimate " +
            std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
            "); increase rho");
    const Mat n = Eigen::LLT<Mat>(n_inv).solve(Mat::Identity(e, e));

    Mat out(d + e, d + e);
    const Mat cross = cs_ath * n;  // D x E'
    out.topLeftCorner(d, d) = c_s + cross * cs_ath.transpose();
    out.topRightCorner(d, e) = -cross;
    out.bottomLeftCorner(e, d) = -cross.transpose();
    out.bottomRightCorner(e, e) = n;
    return out;
}

/// One user's training-side state: raw data, mapped nodes, model and cache.
struct UserNode {
    Mat x_raw;  // N x input_dim
    Mat y;      // N x (B M)
    Mat a;      // mapped nodes, N x D
    BLModel model;
};

/// New data for one incremental round; node_add appends fresh enhancement
/// groups drawn from the model's seed stream continuation.
struct IncrementalBatch {
    Mat x_new;  // N' x input_dim (N' may be 0)
    Mat y_new;
    int add_groups = 0;
    int add_nodes_per_group = 0;
};

/// User-side incremental and collaborative training. Executes, per user:
/// new-node initialization, A_a / H_a construction, the Woodbury sample
/// update then the block node-addition update, and finally t_max consensus
/// rounds on the stacked data. Nodes are updated atomically: any failure
/// leaves them untouched.
inline void run_incremental_training(std::vector<UserNode>& nodes,
                                     const std::vector<IncrementalBatch>& batches,
                                     const ConsensusOptions& opt,
                                     OverheadLedger* ledger = nullptr,
                                     std::vector<ConsensusTraceRow>* trace = nullptr) {
    const int num_users = static_cast<int>(nodes.size());
    if (num_users == 0 || batches.size() != nodes.size())
        throw std::invalid_argument("run_incremental_training: one batch per user required");
    const auto seed = nodes[0].model.arch.weight_seed;
    const int add_groups = batches[0].add_groups;
    const int add_nodes = batches[0].add_nodes_per_group;
    for (int u = 0; u < num_users; ++u) {
        if (nodes[u].model.arch.weight_seed != seed)
            throw std::invalid_argument(
                "run_incremental_training: users must share the random-layer seed for "
                "consensus");
        if (batches[u].add_groups != add_groups ||
            batches[u].add_nodes_per_group != add_nodes)
            throw std::invalid_argument(
                "run_incremental_training: node additions must match across users");
        if (!nodes[u].model.cache)
            throw std::invalid_argument("run_incremental_training: user " + std::to_string(u) +
                                        " has no Gram-inverse cache");
    }

    // stage everything, commit only when every user succeeded
    std::vector<BLRandomLayers> new_layers(num_users);
    std::vector<Mat> a_stacked(num_users), y_stacked(num_users), c_se(num_users);
    for (int u = 0; u < num_users; ++u) {
        UserNode& nd = nodes[u];
        const IncrementalBatch& batch = batches[u];
        new_layers[u] = nd.model.layers;
        for (int g = 0; g < add_groups; ++g)
            make_enhancement_group(new_layers[u], nd.model.arch,
                                   static_cast<int>(nd.model.layers.enhancement_sizes.size()) + g,
                                   add_nodes);

        const Eigen::Index n_new = batch.x_new.rows();
        Mat a_new(n_new, nd.a.cols());
        if (n_new > 0) a_new = map_nodes(nd.model.normalizer.apply(batch.x_new), nd.model.layers);
        Mat a_s(nd.a.rows() + n_new, nd.a.cols());
        a_s << nd.a, a_new;

        Mat c_s = inc_update_samples(nd.model.cache->inv, a_new);

        Mat h_new(a_s.rows(), 0);
        if (add_groups > 0) {
            Mat x_all(nd.x_raw.rows() + n_new, nd.x_raw.cols());
            x_all << nd.x_raw, batch.x_new;
            const Mat z_all = feature_nodes(nd.model.normalizer.apply(x_all), nd.model.layers);
            h_new.resize(a_s.rows(), add_groups * add_nodes);
            const std::size_t base = nd.model.layers.enhancement_sizes.size();
            for (int g = 0; g < add_groups; ++g)
                h_new.middleCols(g * add_nodes, add_nodes) = enhancement_nodes(
                    z_all, new_layers[u].w_enhance[base + g], new_layers[u].b_enhance[base + g]);
        }
        c_se[u] = inc_add_nodes(c_s, a_s, h_new, opt.rho);

        Mat a_se(a_s.rows(), a_s.cols() + h_new.cols());
        a_se << a_s, h_new;
        a_stacked[u] = std::move(a_se);
        Mat y_se(nd.y.rows() + n_new, nd.y.cols());
        if (n_new > 0)
            y_se << nd.y, batch.y_new;
        else
            y_se = nd.y;
        y_stacked[u] = std::move(y_se);
    }

    std::vector<const Mat*> a_ptr(num_users), y_ptr(num_users);
    for (int u = 0; u < num_users; ++u) {
        a_ptr[u] = &a_stacked[u];
        y_ptr[u] = &y_stacked[u];
    }
    ConsensusResult res = run_consensus(a_ptr, y_ptr, c_se, opt, ledger, trace);

    for (int u = 0; u < num_users; ++u) {
        UserNode& nd = nodes[u];
        nd.model.layers = std::move(new_layers[u]);
        nd.model.w_out = std::move(res.w[u]);
        nd.model.cache = GramCache{opt.rho, std::move(c_se[u])};
        nd.a = std::move(a_stacked[u]);
        nd.y = std::move(y_stacked[u]);
        if (batches[u].x_new.rows() > 0) {
            Mat x_all(nd.x_raw.rows() + batches[u].x_new.rows(), nd.x_raw.cols());
            x_all << nd.x_raw, batches[u].x_new;
            nd.x_raw = std::move(x_all);
        }
    }
}

/// Online beam prediction at the user: purely local, no data interaction
/// (the ledger records zero online transfers).
inline std::vector<int> online_predict_user(const BLModel& model, const RowVec& x_raw,
                                            int num_bs) {
    return predict_indices(model, x_raw, num_bs);
}

}  // namespace cfbeam
