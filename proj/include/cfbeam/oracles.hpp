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
// Independent reference computations (brute force, dense inverses,
// re-summation, Monte Carlo) paired against the production paths they
// check. The references deliberately avoid the code under test.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cfbeam/consensus.hpp"
#include "cfbeam/eval.hpp"
#include "cfbeam/experiment.hpp"
#include "cfbeam/split.hpp"

namespace cfbeam::oracles {

struct Comparison {
    std::string name;
    double computed;
    double expected;
    double tolerance;
    bool ok() const { return std::abs(computed - expected) <= tolerance; }
};

namespace detail {
inline Mat random_matrix(Eigen::Index r, Eigen::Index c, SplitRng& rng, double scale = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
    return m;
}
/// Random instances scaled so the Gram matrix has O(1) eigenvalues (entries
/// N(0, 1/4N)); matches the regime the ADMM tolerances are stated for.
inline Mat admm_instance(Eigen::Index n, Eigen::Index d, SplitRng& rng) {
    return random_matrix(n, d, rng, 0.5 / std::sqrt(static_cast<double>(n)));
}
inline Mat dense_regularized_inverse(const Mat& a, double shift) {
    Mat g = a.transpose() * a;
    g.diagonal().array() += shift;
    return g.inverse();  // deliberate plain dense inverse, not the LLT path
}
}  // namespace detail

/// Steering-vector phases vs a direct scalar evaluation of the two
/// exponent expressions.
inline std::vector<Comparison> steering_phase() {
    const double theta = kPi / 6.0, phi = kPi / 3.0, dol = 0.5;
    const int H = 2, W = 2;
    const CVec a = steering_vector(theta, phi, H, W, dol);
    std::vector<Comparison> out;
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            const double want =
                2.0 * kPi * dol * (h * std::cos(phi) + w * std::sin(theta) * std::sin(phi));
            out.push_back({"phase[h=" + std::to_string(h) + ",w=" + std::to_string(w) + "]",
                           std::arg(a[h * W + w]),
                           std::remainder(want, 2.0 * kPi), 1e-12});
        }
    return out;
}

/// DFT codebook Gram vs identity, computed entry-wise.
inline std::vector<Comparison> codebook_gram() {
    const CMat f = dft_codebook(8, 4);
    const CMat gram = f.adjoint() * f;
    return {{"||F^H F - I||_F (8x4)", (gram - CMat::Identity(32, 32)).norm(), 0.0, 1e-10}};
}

/// Channel columns vs a per-path brute-force sum of rank-1 contributions.
inline std::vector<Comparison> channel_sum() {
    ScenarioConfig cfg;
    const SplitRng rng(42);
    const Scene scene = gen_scene(cfg, 3, rng);
    const Vec freqs = cfg.subcarrier_freqs();
    double worst = 0.0;
    for (const auto& cr : scene.realizations)
        for (int b = 0; b < cfg.num_bs; ++b) {
            const CMat h = channel_matrix(cr.links[b], cfg, freqs);
            for (int k = 0; k < freqs.size(); k += 17) {
                CVec ref = CVec::Zero(cfg.num_antennas());
                for (const auto& p : cr.links[b].paths) {
                    const CVec a = steering_vector(p.azimuth_rad, p.elevation_rad, cfg.upa_rows,
                                                   cfg.upa_cols, cfg.antenna_spacing_over_lambda);
                    ref += p.gain * std::exp(cplx(0.0, -2.0 * kPi * freqs[k] * p.delay_s)) * a;
                }
                worst = std::max(worst, (h.col(k) - ref).norm() / ref.norm());
            }
        }
    return {{"max rel err of per-path sum", worst, 0.0, 1e-10}};
}

/// Measurement-noise calibration: sample variance of the estimation error
/// halves when the training power doubles.
inline std::vector<Comparison> noise_calibration() {
    SplitRng rng(7);
    CVec h(8), g(8);
    for (int i = 0; i < 8; ++i) {
        h[i] = rng.cnormal(1.0);
        g[i] = rng.cnormal(1.0);
    }
    g /= g.norm();
    const double noise_var = 0.3;
    auto sample_var = [&](double p_tr) {
        const int n = 100000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += std::norm(beam_response(h, g, p_tr, noise_var, rng) - h.dot(g));
        return acc / n;
    };
    const double v1 = sample_var(1.0);
    const double v2 = sample_var(2.0);
    return {{"var at P_tr=1", v1, noise_var, 0.05 * noise_var},
            {"var at P_tr=2", v2, noise_var / 2.0, 0.05 * noise_var / 2.0},
            {"variance ratio", v1 / v2, 2.0, 0.1}};
}

/// Rate of 16 random groups vs an independent reverse-order re-summation.
inline std::vector<Comparison> rate_resum() {
    SplitRng rng(11);
    std::vector<cplx> resp(16);
    std::vector<int> sizes(16, 4);
    Vec p_bar(16);
    for (int i = 0; i < 16; ++i) {
        resp[i] = rng.cnormal(1.0);
        p_bar[i] = rng.uniform(0.5, 2.0);
    }
    const double sigma2 = 0.7;
    double ref = 0.0;
    for (int i = 15; i >= 0; --i)
        ref += sizes[i] * std::log2(1.0 + p_bar[i] * std::norm(resp[i]) / sigma2);
    const double got = narrow_beam_rate(resp, sizes, p_bar, sigma2);
    return {{"reverse-order re-summation", got, ref, 1e-9 * std::abs(ref)}};
}

/// Woodbury sample update vs a dense inverse of the stacked Gram.
inline std::vector<Comparison> woodbury() {
    SplitRng rng(13);
    std::vector<Comparison> out;
    for (const auto& [d, n, n_new] : std::vector<std::array<int, 3>>{{3, 8, 1}, {40, 60, 5}}) {
        const Mat a = detail::random_matrix(n, d, rng);
        const Mat a_new = detail::random_matrix(n_new, d, rng);
        const double rho = 0.5;
        const Mat c = detail::dense_regularized_inverse(a, rho);
        const Mat got = inc_update_samples(c, a_new);
        Mat stacked(n + n_new, d);
        stacked << a, a_new;
        const Mat ref = detail::dense_regularized_inverse(stacked, rho);
        out.push_back({"D=" + std::to_string(d) + " rel err", (got - ref).norm() / ref.norm(),
                       0.0, d <= 3 ? 1e-10 : 1e-8});
    }
    return out;
}

/// Block node addition vs a dense inverse of the widened Gram.
inline std::vector<Comparison> node_add() {
    SplitRng rng(17);
    const int d = 6, n = 12, e = 2;
    const Mat a = detail::random_matrix(n, d, rng);
    const Mat h = detail::random_matrix(n, e, rng);
    const double rho = 0.8;
    const Mat c_s = detail::dense_regularized_inverse(a, rho);
    const Mat got = inc_add_nodes(c_s, a, h, rho);
    Mat widened(n, d + e);
    widened << a, h;
    const Mat ref = detail::dense_regularized_inverse(widened, rho);
    return {{"block inverse rel err", (got - ref).norm() / ref.norm(), 0.0, 1e-10}};
}

/// Consensus W_0 after 100 rounds vs the stacked centralized ridge solve
/// (at the consensus objective's 2*lambda shift).
inline std::vector<Comparison> consensus_central() {
    SplitRng rng(19);
    const int u_count = 3, d = 40, o = 4;
    std::vector<Mat> a(u_count), y(u_count);
    std::vector<const Mat*> ap(u_count), yp(u_count);
    Mat stacked_a(0, d), stacked_y(0, o);
    for (int u = 0; u < u_count; ++u) {
        const int n = 80 + 30 * u;
        a[u] = detail::admm_instance(n, d, rng);
        y[u] = detail::random_matrix(n, o, rng);
        ap[u] = &a[u];
        yp[u] = &y[u];
        stacked_a.conservativeResize(stacked_a.rows() + n, d);
        stacked_a.bottomRows(n) = a[u];
        stacked_y.conservativeResize(stacked_y.rows() + n, o);
        stacked_y.bottomRows(n) = y[u];
    }
    ConsensusOptions opt;
    opt.rho = 0.1;
    opt.lambda = 0.125;
    opt.t_max = 100;
    const ConsensusResult res = run_consensus(ap, yp, opt);
    Mat g = stacked_a.transpose() * stacked_a;
    g.diagonal().array() += 2.0 * opt.lambda;
    const Mat ref = g.inverse() * (stacked_a.transpose() * stacked_y);
    return {{"||W0 - W_central||/||W_central||", (res.w0 - ref).norm() / ref.norm(), 0.0, 1e-4}};
}

/// Split-training objective after 50 uncompressed rounds vs the centralized
/// optimum on concatenated features.
inline std::vector<Comparison> split_central() {
    SplitRng rng(23);
    const int b_count = 3, o = 5;
    std::vector<int> dims = {30, 45, 25};
    const int n = 150;
    std::vector<Mat> a(b_count);
    std::vector<const Mat*> ap(b_count);
    Mat cat(n, 0);
    for (int b = 0; b < b_count; ++b) {
        a[b] = detail::admm_instance(n, dims[b], rng);
        ap[b] = &a[b];
        cat.conservativeResize(n, cat.cols() + dims[b]);
        cat.rightCols(dims[b]) = a[b];
    }
    const Mat y = detail::random_matrix(n, o, rng);
    SplitOptions opt;
    opt.rho = 0.1;
    opt.lambda = 0.001953125;
    opt.t_max = 50;
    const SplitResult res = run_split_training(ap, y, opt);
    Mat g = cat.transpose() * cat;
    g.diagonal().array() += opt.lambda;
    const Mat w_ref = g.inverse() * (cat.transpose() * y);
    const double ref_obj =
        0.5 * (cat * w_ref - y).squaredNorm() + 0.5 * opt.lambda * w_ref.squaredNorm();
    return {{"objective ratio vs centralized", res.objective_per_round.back() / ref_obj, 1.0,
             0.01}};
}

/// Random uniform predictions vs the analytic all-BS success chance M^-B.
inline std::vector<Comparison> random_guess() {
    SplitRng rng(29);
    const int n = 10000, m = 8, b_count = 2;
    Eigen::MatrixXi genie(n, b_count), guess(n, b_count);
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < b_count; ++b) {
            genie(i, b) = static_cast<int>(rng.uniform_index(m));
            guess(i, b) = static_cast<int>(rng.uniform_index(m));
        }
    const double p = std::pow(static_cast<double>(m), -b_count);
    const double se = std::sqrt(p * (1.0 - p) / n);
    return {{"ba_success of random guesses", ba_success_rate(guess, genie), p, 3.0 * se}};
}

/// Instrumented ledgers vs the closed-form overhead expressions.
inline std::vector<Comparison> overhead() {
    std::vector<Comparison> out;
    out.push_back({"user-side D2D example", overhead_user_side(ExchangeMode::d2d, 2, 700, 96, 10),
                   1344000.0, 0.0});
    out.push_back({"BS-side example",
                   static_cast<double>(overhead_bs_side(1000, 10, 32, 5)), 432000.0, 0.0});
    {
        SplitRng rng(31);
        const int u_count = 3, d = 12, o = 4, t_max = 4;
        std::vector<Mat> a(u_count), y(u_count);
        std::vector<const Mat*> ap(u_count), yp(u_count);
        for (int u = 0; u < u_count; ++u) {
            a[u] = detail::random_matrix(20, d, rng);
            y[u] = detail::random_matrix(20, o, rng);
            ap[u] = &a[u];
            yp[u] = &y[u];
        }
        ConsensusOptions opt;
        opt.rho = 1.0;
        opt.lambda = 0.125;
        opt.t_max = t_max;
        OverheadLedger ledger;
        run_consensus(ap, yp, opt, &ledger);
        out.push_back({"instrumented D2D per user",
                       static_cast<double>(ledger.node("user0").sent),
                       overhead_user_side(ExchangeMode::d2d, u_count, d, o, t_max), 0.0});
    }
    {
        SplitRng rng(37);
        const int b_count = 2, n = 30, o = 6, t_max = 3, budget = 2;
        std::vector<Mat> a(b_count);
        std::vector<const Mat*> ap(b_count);
        for (int b = 0; b < b_count; ++b) {
            a[b] = detail::random_matrix(n, 10, rng);
            ap[b] = &a[b];
        }
        const Mat y = detail::random_matrix(n, o, rng);
        SplitOptions opt;
        opt.rho = 1.0;
        opt.lambda = 0.1;
        opt.t_max = t_max;
        opt.compress = budget;
        OverheadLedger ledger;
        run_split_training(ap, y, opt, &ledger);
        const auto c = ledger.node("bs0");
        out.push_back({"instrumented BS total",
                       static_cast<double>(c.sent + c.received),
                       static_cast<double>(overhead_bs_side(n, budget, o / b_count, t_max)), 0.0});
    }
    return out;
}

using OracleFn = std::function<std::vector<Comparison>()>;

inline const std::map<std::string, OracleFn>& registry() {
    static const std::map<std::string, OracleFn> reg = {
        {"steering-phase", steering_phase},
        {"codebook-gram", codebook_gram},
        {"channel-sum", channel_sum},
        {"noise-calibration", noise_calibration},
        {"rate-resum", rate_resum},
        {"woodbury", woodbury},
        {"node-add", node_add},
        {"consensus-central", consensus_central},
        {"split-central", split_central},
        {"random-guess", random_guess},
        {"overhead", overhead},
    };
    return reg;
}

/// Run one oracle (or "all") and print comparisons; returns the failure count.
inline int run_oracles(const std::string& name, std::ostream& os = std::cout) {
    int failures = 0;
    auto run_one = [&](const std::string& key, const OracleFn& fn) {
        for (const auto& c : fn()) {
            const bool ok = c.ok();
            failures += ok ? 0 : 1;
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%-18s %-34s computed=%-14.8g expected=%-14.8g %s\n",
                          key.c_str(), c.name.c_str(), c.computed, c.expected,
                          ok ? "OK" : "FAIL");
            os << buf;
        }
    };
    if (name == "all") {
        for (const auto& [key, fn] : registry()) run_one(key, fn);
    } else {
        const auto it = registry().find(name);
        if (it == registry().end()) {
            os << "unknown oracle '" << name << "'; available:";
            for (const auto& [key, fn] : registry()) os << ' ' << key;
            os << " all\n";
            return 1;
        }
        run_one(name, it->second);
    }
    return failures;
}

}  // namespace cfbeam::oracles
