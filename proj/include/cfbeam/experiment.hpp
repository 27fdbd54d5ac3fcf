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
// Experiment specs (INI), scheme orchestration and result emission.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/consensus.hpp"
#include "cfbeam/eval.hpp"
#include "cfbeam/ini.hpp"
#include "cfbeam/split.hpp"

namespace cfbeam {

struct ConsensusExperimentOptions {
    double rho = 5.0;
    int t_max = 10;
    ExchangeMode mode = ExchangeMode::d2d;
    double incremental_fraction = 0.2;  // tail of each user's data arriving as the increment
    int add_groups = 0;
    int add_nodes_per_group = 0;
};

struct SplitExperimentOptions {
    double rho = 0.1;
    double lambda = 0.001953125;  // 2^-9
    int t_max = 5;
    int mvs_budget = 0;  // 0 = dense fronthaul messages
};

struct ExperimentSpec {
    ScenarioConfig scenario;
    BLArchitecture arch;  // arch.enhancement_nodes = 0 selects the 500/1500 rule
    ConsensusExperimentOptions consensus;
    SplitExperimentOptions split;
    Side side = Side::user;
    ProbingKind probing_kind = ProbingKind::expanded_steering;
    std::vector<std::string> schemes = {"genie", "exhaustive", "fdbl", "icbl", "cbl", "fcbl"};
    int n_positions = 5000;
    double frac_train = 0.8;
    std::vector<int> train_sizes = {1500};
    int repetitions = 1;
    std::string output_dir = "out";
    bool save_models = false;
    std::string sweep_param;  // "", "p_ul_dbm", "T_ms", "t_max"
    std::vector<double> sweep_values;

    std::vector<std::string> validate() const {
        std::vector<std::string> errs = scenario.validate();
        if (arch.enhancement_nodes != 0)
            for (const auto& e : arch.validate()) errs.push_back(e);
        if (n_positions < 2) errs.push_back("experiment.n_positions: must be >= 2");
        if (!(frac_train > 0.0 && frac_train < 1.0))
            errs.push_back("experiment.frac_train: must be in (0, 1)");
        if (train_sizes.empty()) errs.push_back("experiment.train_sizes: need at least one size");
        for (const int n : train_sizes)
            if (n < scenario.num_users)
                errs.push_back("experiment.train_sizes: size smaller than the user count");
        if (repetitions < 1) errs.push_back("experiment.repetitions: must be >= 1");
        if (schemes.empty()) errs.push_back("experiment.schemes: need at least one scheme");
        for (const auto& s : schemes)
            if (s != "genie" && s != "exhaustive" && s != "fdbl" && s != "fcbl" && s != "cbl" &&
                s != "icbl")
                errs.push_back("experiment.schemes: unknown scheme '" + s + "'");
        if (!sweep_param.empty() && sweep_param != "p_ul_dbm" && sweep_param != "T_ms" &&
            sweep_param != "t_max")
            errs.push_back("experiment.sweep_param: must be one of p_ul_dbm, T_ms, t_max");
        if (!sweep_param.empty() && sweep_values.empty())
            errs.push_back("experiment.sweep_values: required when sweep_param is set");
        if (!(consensus.incremental_fraction >= 0.0 && consensus.incremental_fraction < 1.0))
            errs.push_back("consensus.incremental_fraction: must be in [0, 1)");
        if (split.mvs_budget < 0)
            errs.push_back("split.mvs_budget: must be >= 0 (0 disables MVS)");
        return errs;
    }
};

// ---- spec I/O ---------------------------------------------------------------

inline ExperimentSpec parse_spec(const std::string& text,
                                 const std::string& origin = "<string>") {
    const IniDoc ini = IniDoc::parse(text, origin);
    ExperimentSpec spec;
    auto& sc = spec.scenario;
    sc.num_bs = static_cast<int>(ini.get_int("scenario", "num_bs", sc.num_bs));
    sc.upa_rows = static_cast<int>(ini.get_int("scenario", "upa_rows", sc.upa_rows));
    sc.upa_cols = static_cast<int>(ini.get_int("scenario", "upa_cols", sc.upa_cols));
    sc.num_users = static_cast<int>(ini.get_int("scenario", "num_users", sc.num_users));
    sc.num_subcarriers =
        static_cast<int>(ini.get_int("scenario", "num_subcarriers", sc.num_subcarriers));
    sc.carrier_hz = ini.get_double("scenario", "carrier_hz", sc.carrier_hz);
    sc.bandwidth_hz = ini.get_double("scenario", "bandwidth_hz", sc.bandwidth_hz);
    sc.subcarriers_per_user = static_cast<int>(
        ini.get_int("scenario", "subcarriers_per_user", sc.subcarriers_per_user));
    sc.groups_per_user =
        static_cast<int>(ini.get_int("scenario", "groups_per_user", sc.groups_per_user));
    sc.paths_per_link =
        static_cast<int>(ini.get_int("scenario", "paths_per_link", sc.paths_per_link));
    sc.p_dl_total_w = ini.get_double("scenario", "p_dl_total_w", sc.p_dl_total_w);
    sc.p_ul_w = ini.get_double("scenario", "p_ul_w", sc.p_ul_w);
    sc.noise_var_w = ini.get_double("scenario", "noise_var_w", sc.noise_var_w);
    sc.tracking_period_ms =
        ini.get_double("scenario", "tracking_period_ms", sc.tracking_period_ms);
    sc.beam_time_ms = ini.get_double("scenario", "beam_time_ms", sc.beam_time_ms);
    sc.num_probing_beams =
        static_cast<int>(ini.get_int("scenario", "num_probing_beams", sc.num_probing_beams));
    sc.antenna_spacing_over_lambda = ini.get_double("scenario", "antenna_spacing_over_lambda",
                                                    sc.antenna_spacing_over_lambda);
    if (ini.has("scenario", "region")) {
        const auto v = ini.get_doubles("scenario", "region", {});
        if (v.size() != 5)
            throw std::runtime_error(origin +
                                     ": scenario.region needs 5 numbers (xmin xmax ymin ymax z)");
        sc.region = {v[0], v[1], v[2], v[3], v[4]};
    }
    if (ini.has("scenario", "bs_positions")) {
        const auto v = ini.get_doubles("scenario", "bs_positions", {});
        if (v.size() % 3 != 0)
            throw std::runtime_error(origin + ": scenario.bs_positions needs x y z triples");
        sc.bs_positions.clear();
        for (std::size_t i = 0; i + 2 < v.size(); i += 3)
            sc.bs_positions.push_back({v[i], v[i + 1], v[i + 2]});
    }
    sc.seed = static_cast<std::uint64_t>(ini.get_int("scenario", "seed", sc.seed));
    sc.num_scatterers =
        static_cast<int>(ini.get_int("scenario", "num_scatterers", sc.num_scatterers));
    sc.reflection_loss_db =
        ini.get_double("scenario", "reflection_loss_db", sc.reflection_loss_db);
    sc.p_tr_dl_w = ini.get_double("scenario", "p_tr_dl_w", sc.p_tr_dl_w);
    sc.p_tr_ul_w = ini.get_double("scenario", "p_tr_ul_w", sc.p_tr_ul_w);
    sc.noisy_labels = ini.get_bool("scenario", "noisy_labels", sc.noisy_labels);
    spec.probing_kind =
        probing_kind_from_string(ini.get_string("scenario", "probing_kind", "expanded_steering"));

    auto& ar = spec.arch;
    ar.feature_groups = static_cast<int>(ini.get_int("arch", "feature_groups", ar.feature_groups));
    ar.feature_nodes = static_cast<int>(ini.get_int("arch", "feature_nodes", ar.feature_nodes));
    ar.enhancement_groups =
        static_cast<int>(ini.get_int("arch", "enhancement_groups", ar.enhancement_groups));
    ar.enhancement_nodes = static_cast<int>(ini.get_int("arch", "enhancement_nodes", 0));
    ar.lambda = ini.get_double("arch", "lambda", ar.lambda);
    ar.weight_seed = static_cast<std::uint64_t>(ini.get_int("arch", "weight_seed", ar.weight_seed));

    auto& co = spec.consensus;
    co.rho = ini.get_double("consensus", "rho", co.rho);
    co.t_max = static_cast<int>(ini.get_int("consensus", "t_max", co.t_max));
    const std::string mode = ini.get_string("consensus", "mode", "d2d");
    if (mode == "d2d")
        co.mode = ExchangeMode::d2d;
    else if (mode == "bs_relayed")
        co.mode = ExchangeMode::bs_relayed;
    else
        throw std::runtime_error(origin + ": consensus.mode must be d2d or bs_relayed");
    co.incremental_fraction =
        ini.get_double("consensus", "incremental_fraction", co.incremental_fraction);
    co.add_groups = static_cast<int>(ini.get_int("consensus", "add_groups", co.add_groups));
    co.add_nodes_per_group =
        static_cast<int>(ini.get_int("consensus", "add_nodes_per_group", co.add_nodes_per_group));

    auto& sp = spec.split;
    sp.rho = ini.get_double("split", "rho", sp.rho);
    sp.lambda = ini.get_double("split", "lambda", sp.lambda);
    sp.t_max = static_cast<int>(ini.get_int("split", "t_max", sp.t_max));
    sp.mvs_budget = static_cast<int>(ini.get_int("split", "mvs_budget", sp.mvs_budget));

    const std::string side = ini.get_string("experiment", "side", "user");
    if (side == "user")
        spec.side = Side::user;
    else if (side == "bs")
        spec.side = Side::bs;
    else
        throw std::runtime_error(origin + ": experiment.side must be user or bs");
    spec.schemes = ini.get_words("experiment", "schemes", spec.schemes);
    spec.n_positions = static_cast<int>(ini.get_int("experiment", "n_positions", spec.n_positions));
    spec.frac_train = ini.get_double("experiment", "frac_train", spec.frac_train);
    if (ini.has("experiment", "train_sizes")) {
        spec.train_sizes.clear();
        for (const double v : ini.get_doubles("experiment", "train_sizes", {}))
            spec.train_sizes.push_back(static_cast<int>(v));
    }
    spec.repetitions = static_cast<int>(ini.get_int("experiment", "repetitions", spec.repetitions));
    spec.output_dir = ini.get_string("experiment", "output_dir", spec.output_dir);
    spec.save_models = ini.get_bool("experiment", "save_models", spec.save_models);
    spec.sweep_param = ini.get_string("experiment", "sweep_param", spec.sweep_param);
    spec.sweep_values = ini.get_doubles("experiment", "sweep_values", spec.sweep_values);

    ini.reject_unconsumed({"scenario", "arch", "consensus", "split", "experiment"});

    const auto errs = spec.validate();
    if (!errs.empty()) {
        std::string msg = origin + ": invalid spec:";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw std::runtime_error(msg);
    }
    return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_spec: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str(), path);
}

inline std::string serialize_spec(const ExperimentSpec& spec) {
    std::ostringstream out;
    char buf[256];
    auto num = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
        out << buf;
    };
    auto integer = [&](const char* key, long long v) { out << key << " = " << v << '\n'; };
    const auto& sc = spec.scenario;
    out << "[scenario]\n";
    integer("num_bs", sc.num_bs);
    integer("upa_rows", sc.upa_rows);
    integer("upa_cols", sc.upa_cols);
    integer("num_users", sc.num_users);
    integer("num_subcarriers", sc.num_subcarriers);
    num("carrier_hz", sc.carrier_hz);
    num("bandwidth_hz", sc.bandwidth_hz);
    integer("subcarriers_per_user", sc.subcarriers_per_user);
    integer("groups_per_user", sc.groups_per_user);
    integer("paths_per_link", sc.paths_per_link);
    num("p_dl_total_w", sc.p_dl_total_w);
    num("p_ul_w", sc.p_ul_w);
    num("noise_var_w", sc.noise_var_w);
    num("tracking_period_ms", sc.tracking_period_ms);
    num("beam_time_ms", sc.beam_time_ms);
    integer("num_probing_beams", sc.num_probing_beams);
    num("antenna_spacing_over_lambda", sc.antenna_spacing_over_lambda);
    std::snprintf(buf, sizeof(buf), "region = %.17g %.17g %.17g %.17g %.17g\n", sc.region.x_min,
                  sc.region.x_max, sc.region.y_min, sc.region.y_max, sc.region.z);
    out << buf;
    out << "bs_positions =";
    for (const auto& p : sc.bs_positions) {
        std::snprintf(buf, sizeof(buf), " %.17g %.17g %.17g", p.x(), p.y(), p.z());
        out << buf;
    }
    out << '\n';
    integer("seed", static_cast<long long>(sc.seed));
    integer("num_scatterers", sc.num_scatterers);
    num("reflection_loss_db", sc.reflection_loss_db);
    num("p_tr_dl_w", sc.p_tr_dl_w);
    num("p_tr_ul_w", sc.p_tr_ul_w);
    out << "noisy_labels = " << (sc.noisy_labels ? "true" : "false") << '\n';
    out << "probing_kind = " << to_string(spec.probing_kind) << '\n';

    out << "\n[arch]\n";
    integer("feature_groups", spec.arch.feature_groups);
    integer("feature_nodes", spec.arch.feature_nodes);
    integer("enhancement_groups", spec.arch.enhancement_groups);
    integer("enhancement_nodes", spec.arch.enhancement_nodes);
    num("lambda", spec.arch.lambda);
    integer("weight_seed", static_cast<long long>(spec.arch.weight_seed));

    out << "\n[consensus]\n";
    num("rho", spec.consensus.rho);
    integer("t_max", spec.consensus.t_max);
    out << "mode = " << (spec.consensus.mode == ExchangeMode::d2d ? "d2d" : "bs_relayed") << '\n';
    num("incremental_fraction", spec.consensus.incremental_fraction);
    integer("add_groups", spec.consensus.add_groups);
    integer("add_nodes_per_group", spec.consensus.add_nodes_per_group);

    out << "\n[split]\n";
    num("rho", spec.split.rho);
    num("lambda", spec.split.lambda);
    integer("t_max", spec.split.t_max);
    integer("mvs_budget", spec.split.mvs_budget);

    out << "\n[experiment]\n";
    out << "side = " << (spec.side == Side::user ? "user" : "bs") << '\n';
    out << "schemes =";
    for (const auto& s : spec.schemes) out << ' ' << s;
    out << '\n';
    integer("n_positions", spec.n_positions);
    num("frac_train", spec.frac_train);
    out << "train_sizes =";
    for (const int n : spec.train_sizes) out << ' ' << n;
    out << '\n';
    integer("repetitions", spec.repetitions);
    out << "output_dir = " << spec.output_dir << '\n';
    out << "save_models = " << (spec.save_models ? "true" : "false") << '\n';
    if (!spec.sweep_param.empty()) {
        out << "sweep_param = " << spec.sweep_param << '\n';
        out << "sweep_values =";
        for (const double v : spec.sweep_values) {
            std::snprintf(buf, sizeof(buf), " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

// ---- scheme runners ---------------------------------------------------------

namespace detail {

struct PreparedRun {
    Dataset train;                  // pooled training rows (n_train of them)
    std::vector<Dataset> per_user;  // user-side partition of `train`
    Dataset test;
    BLArchitecture arch;  // effective (enhancement width resolved)
    ScenarioConfig cfg;
};

inline Mat bs_concat_features(const Dataset& ds) {
    Eigen::Index cols = 0;
    for (const auto& x : ds.x_bs) cols += x.cols();
    Mat out(ds.size(), cols);
    Eigen::Index at = 0;
    for (const auto& x : ds.x_bs) {
        out.middleCols(at, x.cols()) = x;
        at += x.cols();
    }
    return out;
}

inline SchemeResult finish_result(const std::string& name, const PreparedRun& run,
                                  const RateEvaluator& eval, const Eigen::MatrixXi& indices,
                                  double t_r_ms, std::int64_t overhead) {
    SchemeResult r;
    r.scheme = name;
    r.t_r_ms = t_r_ms;
    r.overhead_reals = overhead;
    r.indices = indices;
    r.per_point_se = eval.subcarrier_avg_se(indices);
    r.se_ave_eff = se_ave_eff(r.per_point_se, t_r_ms, run.cfg.tracking_period_ms);
    r.ba_success = ba_success_rate(indices, run.test.genie_index);
    r.top1_acc = top1_accuracy(indices, run.test.genie_index);
    return r;
}

/// Metrics averaged over several local models (the fully distributed
/// schemes evaluate every node's model and report the mean).
inline SchemeResult finish_result_multi(const std::string& name, const PreparedRun& run,
                                        const RateEvaluator& eval,
                                        const std::vector<Eigen::MatrixXi>& indices,
                                        double t_r_ms, std::int64_t overhead) {
    SchemeResult r;
    r.scheme = name;
    r.t_r_ms = t_r_ms;
    r.overhead_reals = overhead;
    r.indices = indices.front();
    r.per_point_se = Vec::Zero(run.test.size());
    r.ba_success = 0.0;
    r.top1_acc = 0.0;
    for (const auto& idx : indices) {
        r.per_point_se += eval.subcarrier_avg_se(idx);
        r.ba_success += ba_success_rate(idx, run.test.genie_index);
        r.top1_acc += top1_accuracy(idx, run.test.genie_index);
    }
    const double m = static_cast<double>(indices.size());
    r.per_point_se /= m;
    r.ba_success /= m;
    r.top1_acc /= m;
    r.se_ave_eff = se_ave_eff(r.per_point_se, t_r_ms, run.cfg.tracking_period_ms);
    return r;
}

/// Batched per-BS-block argmax of mapped scores.
inline Eigen::MatrixXi predict_matrix(const Mat& scores, int num_bs) {
    const int m = static_cast<int>(scores.cols()) / num_bs;
    Eigen::MatrixXi idx(scores.rows(), num_bs);
    for (Eigen::Index r = 0; r < scores.rows(); ++r)
        for (int b = 0; b < num_bs; ++b)
            idx(r, b) = argmax_first(scores.row(r).segment(b * m, m).transpose());
    return idx;
}

}  // namespace detail

/// Output of one (scheme, size, repetition) cell plus any traces produced.
struct RunOutputs {
    std::vector<SchemeResult> results;
    std::vector<ConsensusTraceRow> consensus_trace;
    std::vector<FronthaulRecord> fronthaul_trace;
    std::vector<std::pair<std::string, BLModel>> models;
    std::vector<std::string> errors;
};

inline SchemeResult run_user_collaborative(const std::string& scheme, const ExperimentSpec& spec,
                                           const detail::PreparedRun& run,
                                           const RateEvaluator& eval, double t_r_bl,
                                           OverheadLedger& ledger, RunOutputs& out);
inline SchemeResult run_bs_collaborative(const std::string& scheme, const ExperimentSpec& spec,
                                         const detail::PreparedRun& run,
                                         const RateEvaluator& eval, double t_r_bl,
                                         OverheadLedger& ledger, RunOutputs& out);

/// Train and evaluate every requested scheme on one prepared run.
inline RunOutputs run_schemes(const ExperimentSpec& spec, const detail::PreparedRun& run,
                              const RateEvaluator& eval) {
    RunOutputs out;
    const auto& cfg = run.cfg;
    const int B = cfg.num_bs;
    const double t_r_bl =
        (spec.side == Side::user) ? t_r_user_side_bl(cfg) : t_r_bs_side_bl(cfg);
    const double t_r_exh = (spec.side == Side::user) ? t_r_exhaustive_downlink(cfg)
                                                     : t_r_exhaustive_uplink(cfg);

    for (const std::string& scheme : spec.schemes) {
        try {
            if (scheme == "genie") {
                out.results.push_back(
                    detail::finish_result("genie", run, eval, run.test.genie_index, 0.0, 0));
            } else if (scheme == "exhaustive") {
                Eigen::MatrixXi idx(run.test.size(), B);
                for (int r = 0; r < run.test.size(); ++r) {
                    const auto v = exhaustive_search(run.test, r);
                    for (int b = 0; b < B; ++b) idx(r, b) = v[b];
                }
                out.results.push_back(
                    detail::finish_result("exhaustive", run, eval, idx, t_r_exh, 0));
            } else if (scheme == "fdbl") {
                std::vector<Eigen::MatrixXi> indices;
                if (spec.side == Side::user) {
                    for (const auto& part : run.per_user) {
                        BLModel m = train_model(run.arch, part.x_user, part.labels);
                        const Mat scores =
                            map_nodes(m.normalizer.apply(run.test.x_user), m.layers) * m.w_out;
                        indices.push_back(detail::predict_matrix(scores, B));
                    }
                } else {
                    for (int b = 0; b < B; ++b) {
                        BLArchitecture arch_b = run.arch;
                        arch_b.weight_seed =
                            SplitRng(run.arch.weight_seed).split("bs-layers", b).next_u64();
                        BLModel m = train_model(arch_b, run.train.x_bs[b], run.train.labels);
                        const Mat scores =
                            map_nodes(m.normalizer.apply(run.test.x_bs[b]), m.layers) * m.w_out;
                        indices.push_back(detail::predict_matrix(scores, B));
                    }
                }
                out.results.push_back(
                    detail::finish_result_multi("fdbl", run, eval, indices, t_r_bl, 0));
            } else if (scheme == "fcbl") {
                OverheadLedger ledger;
                Eigen::MatrixXi idx;
                BLModel m;
                if (spec.side == Side::user) {
                    m = train_model(run.arch, run.train.x_user, run.train.labels);
                    // users ship raw features + labels up, the trained model back
                    const auto din = static_cast<std::int64_t>(run.train.x_user.cols());
                    const auto o = static_cast<std::int64_t>(run.train.labels.cols());
                    for (std::size_t u = 0; u < run.per_user.size(); ++u)
                        ledger.record("user" + std::to_string(u), "cu",
                                      run.per_user[u].size() * (din + o));
                    ledger.record_broadcast("cu", {"users"},
                                            static_cast<std::int64_t>(m.layers.total_dim()) * o);
                    const Mat scores =
                        map_nodes(m.normalizer.apply(run.test.x_user), m.layers) * m.w_out;
                    idx = detail::predict_matrix(scores, B);
                } else {
                    const Mat x_cat = detail::bs_concat_features(run.train);
                    m = train_model(run.arch, x_cat, run.train.labels);
                    // each BS ships its feature slice plus its label block
                    for (int b = 0; b < B; ++b)
                        ledger.record("bs" + std::to_string(b), "cu",
                                      static_cast<std::int64_t>(run.train.size()) *
                                          (run.train.x_bs[b].cols() + run.train.num_beams));
                    const Mat scores =
                        map_nodes(m.normalizer.apply(detail::bs_concat_features(run.test)),
                                  m.layers) *
                        m.w_out;
                    idx = detail::predict_matrix(scores, B);
                }
                auto r = detail::finish_result("fcbl", run, eval, idx, t_r_bl,
                                               ledger.total_sent());
                if (spec.save_models) out.models.push_back({"fcbl", std::move(m)});
                out.results.push_back(std::move(r));
            } else if (scheme == "cbl" || scheme == "icbl") {
                OverheadLedger ledger;
                if (spec.side == Side::user) {
                    out.results.push_back(run_user_collaborative(scheme, spec, run, eval, t_r_bl,
                                                                 ledger, out));
                } else {
                    out.results.push_back(
                        run_bs_collaborative(scheme, spec, run, eval, t_r_bl, ledger, out));
                }
            } else {
                throw std::runtime_error("unknown scheme '" + scheme + "'");
            }
        } catch (const std::exception& e) {
            out.errors.push_back(scheme + ": " + e.what());
        }
    }
    return out;
}

/// User-side CBL/ICBL: consensus over per-user data with shared layers and a
/// shared normalizer. ICBL holds back the tail of each user's data and feeds
/// it through the incremental path (Woodbury cache update + consensus).
inline SchemeResult run_user_collaborative(const std::string& scheme, const ExperimentSpec& spec,
                                           const detail::PreparedRun& run,
                                           const RateEvaluator& eval, double t_r_bl,
                                           OverheadLedger& ledger, RunOutputs& out) {
    const int B = run.cfg.num_bs;
    const int U = static_cast<int>(run.per_user.size());
    const auto& copt = spec.consensus;
    ConsensusOptions opt;
    opt.rho = copt.rho;
    opt.lambda = run.arch.lambda;
    opt.t_max = copt.t_max;
    opt.mode = copt.mode;

    // base/increment split per user (identical split for cbl so that the
    // normalizer, fitted on pooled base data, matches the icbl path exactly)
    std::vector<Mat> x_base(U), y_base(U), x_inc(U), y_inc(U);
    Eigen::Index base_rows_total = 0;
    for (int u = 0; u < U; ++u) {
        const auto& part = run.per_user[u];
        const int n = part.size();
        const int n_inc = (scheme == "icbl" || scheme == "cbl")
                              ? static_cast<int>(std::llround(copt.incremental_fraction * n))
                              : 0;
        const int n_base = n - n_inc;
        x_base[u] = part.x_user.topRows(n_base);
        y_base[u] = part.labels.topRows(n_base);
        x_inc[u] = part.x_user.bottomRows(n_inc);
        y_inc[u] = part.labels.bottomRows(n_inc);
        base_rows_total += n_base;
    }
    Mat x_pool(base_rows_total, run.train.x_user.cols());
    {
        Eigen::Index at = 0;
        for (int u = 0; u < U; ++u) {
            x_pool.middleRows(at, x_base[u].rows()) = x_base[u];
            at += x_base[u].rows();
        }
    }
    const Normalizer norm = Normalizer::fit(x_pool);
    const BLRandomLayers layers = init_layers(run.arch, static_cast<int>(x_pool.cols()));

    std::vector<Mat> w_final(U);
    BLRandomLayers layers_final = layers;
    if (scheme == "cbl") {
        // from-scratch consensus on all data (base + increment stacked)
        std::vector<Mat> a_all(U), y_all(U);
        for (int u = 0; u < U; ++u) {
            Mat x_all(x_base[u].rows() + x_inc[u].rows(), x_base[u].cols());
            x_all << x_base[u], x_inc[u];
            a_all[u] = map_nodes(norm.apply(x_all), layers);
            Mat y_cat(y_base[u].rows() + y_inc[u].rows(), y_base[u].cols());
            y_cat << y_base[u], y_inc[u];
            y_all[u] = std::move(y_cat);
        }
        std::vector<const Mat*> ap(U), yp(U);
        for (int u = 0; u < U; ++u) {
            ap[u] = &a_all[u];
            yp[u] = &y_all[u];
        }
        ConsensusResult res = run_consensus(ap, yp, opt, &ledger, &out.consensus_trace);
        w_final = std::move(res.w);
    } else {
        std::vector<UserNode> nodes(U);
        std::vector<IncrementalBatch> batches(U);
        for (int u = 0; u < U; ++u) {
            nodes[u].x_raw = x_base[u];
            nodes[u].y = y_base[u];
            nodes[u].model.arch = run.arch;
            nodes[u].model.layers = layers;
            nodes[u].model.normalizer = norm;
            nodes[u].a = map_nodes(norm.apply(x_base[u]), layers);
            nodes[u].model.cache = GramCache{opt.rho, gram_inverse(nodes[u].a, opt.rho)};
            batches[u] = {x_inc[u], y_inc[u], copt.add_groups, copt.add_nodes_per_group};
        }
        run_incremental_training(nodes, batches, opt, &ledger, &out.consensus_trace);
        for (int u = 0; u < U; ++u) {
            w_final[u] = nodes[u].model.w_out;
            layers_final = nodes[u].model.layers;
            if (spec.save_models)
                out.models.push_back({"icbl_user" + std::to_string(u), nodes[u].model});
        }
    }

    const Mat test_nodes = map_nodes(norm.apply(run.test.x_user), layers_final);
    std::vector<Eigen::MatrixXi> indices;
    for (int u = 0; u < U; ++u)
        indices.push_back(detail::predict_matrix(test_nodes * w_final[u], B));
    return detail::finish_result_multi(scheme, run, eval, indices, t_r_bl, ledger.total_sent());
}

/// BS-side CBL/ICBL: vertical-split training, MVS-compressed
/// when a budget is configured, evaluated through online score fusion.
inline SchemeResult run_bs_collaborative(const std::string& scheme, const ExperimentSpec& spec,
                                         const detail::PreparedRun& run,
                                         const RateEvaluator& eval, double t_r_bl,
                                         OverheadLedger& ledger, RunOutputs& out) {
    const int B = run.cfg.num_bs;
    SplitOptions opt;
    opt.rho = spec.split.rho;
    opt.lambda = spec.split.lambda;
    opt.t_max = spec.split.t_max;
    if (spec.split.mvs_budget > 0) opt.compress = spec.split.mvs_budget;

    std::vector<BLRandomLayers> layers(B);
    std::vector<Normalizer> norms(B);
    std::vector<Mat> a_local(B);
    for (int b = 0; b < B; ++b) {
        BLArchitecture arch_b = run.arch;
        arch_b.weight_seed = SplitRng(run.arch.weight_seed).split("bs-layers", b).next_u64();
        layers[b] = init_layers(arch_b, static_cast<int>(run.train.x_bs[b].cols()));
        norms[b] = Normalizer::fit(run.train.x_bs[b]);
        a_local[b] = map_nodes(norms[b].apply(run.train.x_bs[b]), layers[b]);
    }
    std::vector<const Mat*> ap(B);
    for (int b = 0; b < B; ++b) ap[b] = &a_local[b];
    SplitResult res = run_split_training(ap, run.train.labels, opt, &ledger, &out.fronthaul_trace);

    std::vector<Mat> test_scores(B);
    for (int b = 0; b < B; ++b)
        test_scores[b] = map_nodes(norms[b].apply(run.test.x_bs[b]), layers[b]) * res.w[b];
    Mat fused = test_scores[0];
    for (int b = 1; b < B; ++b) fused += test_scores[b];
    const Eigen::MatrixXi idx = detail::predict_matrix(fused, B);
    return detail::finish_result(scheme, run, eval, idx, t_r_bl, ledger.total_sent());
}

// ---- experiment driver ------------------------------------------------------

struct ExperimentSummary {
    std::vector<SchemeResult> results;
    std::vector<double> sweep_values_per_result;
    int errors = 0;
};

/// Execute the full spec: scene generation, dataset build, per-scheme
/// training and evaluation, and file emission under spec.output_dir.
/// Numerical failures of one scheme are recorded and do not stop the run.
inline ExperimentSummary run_experiment(const ExperimentSpec& spec, bool quiet = false) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.output_dir);
    ExperimentSummary summary;
    std::vector<std::string> error_rows;

    const std::vector<double> sweep =
        spec.sweep_param.empty() ? std::vector<double>{0.0} : spec.sweep_values;
    for (std::size_t si = 0; si < sweep.size(); ++si) {
        ScenarioConfig cfg = spec.scenario;
        ConsensusExperimentOptions copt = spec.consensus;
        SplitExperimentOptions sopt = spec.split;
        if (spec.sweep_param == "p_ul_dbm")
            cfg.p_ul_w = std::pow(10.0, (sweep[si] - 30.0) / 10.0);
        else if (spec.sweep_param == "T_ms")
            cfg.tracking_period_ms = sweep[si];
        else if (spec.sweep_param == "t_max") {
            copt.t_max = static_cast<int>(sweep[si]);
            sopt.t_max = static_cast<int>(sweep[si]);
        }
        ExperimentSpec cell_spec = spec;
        cell_spec.scenario = cfg;
        cell_spec.consensus = copt;
        cell_spec.split = sopt;

        for (const int n_train : spec.train_sizes) {
            for (int rep = 0; rep < spec.repetitions; ++rep) {
                const std::uint64_t run_seed = SplitRng(spec.scenario.seed)
                                                   .split("sweep", si)
                                                   .split("size", static_cast<std::uint64_t>(n_train))
                                                   .split("rep", rep)
                                                   .next_u64();
                ScenarioConfig run_cfg = cfg;
                run_cfg.seed = run_seed;
                const std::string tag = "s" + std::to_string(si) + "_n" +
                                        std::to_string(n_train) + "_r" + std::to_string(rep);
                try {
                    const SplitRng rng(run_seed);
                    const Scene scene = gen_scene(run_cfg, spec.n_positions, rng);
                    const CMat codebook = dft_codebook(run_cfg.upa_rows, run_cfg.upa_cols);
                    const auto probes = make_probing_beams(run_cfg, spec.probing_kind);
                    Dataset all =
                        build_samples(scene, run_cfg, probes, codebook, spec.side, rng);
                    auto [pool, test] = split_train_test(all, spec.frac_train, run_seed);
                    if (n_train > pool.size())
                        throw std::runtime_error("train size " + std::to_string(n_train) +
                                                 " exceeds the training pool (" +
                                                 std::to_string(pool.size()) + ")");
                    std::vector<int> rows(n_train);
                    std::iota(rows.begin(), rows.end(), 0);

                    detail::PreparedRun run;
                    run.cfg = run_cfg;
                    run.train = subset(pool, rows);
                    run.per_user = partition_users(run.train, run_cfg.num_users);
                    run.test = std::move(test);
                    run.arch = spec.arch;
                    if (run.arch.enhancement_nodes <= 0)
                        run.arch.enhancement_nodes =
                            BLArchitecture::default_enhancement_nodes(n_train);

                    const RateEvaluator eval(scene, run_cfg, codebook, run.test.scene_index);
                    RunOutputs outputs = run_schemes(cell_spec, run, eval);
                    for (auto& r : outputs.results) {
                        r.n_train = n_train;
                        r.seed = run_seed;
                        summary.results.push_back(std::move(r));
                        summary.sweep_values_per_result.push_back(sweep[si]);
                    }
                    for (const auto& e : outputs.errors)
                        error_rows.push_back(tag + "," + e);
                    if (!outputs.consensus_trace.empty())
                        write_consensus_trace(outputs.consensus_trace,
                                              spec.output_dir + "/consensus_trace_" + tag +
                                                  ".csv");
                    if (!outputs.fronthaul_trace.empty())
                        write_fronthaul_trace(outputs.fronthaul_trace,
                                              spec.output_dir + "/fronthaul_trace_" + tag +
                                                  ".csv");
                    for (const auto& [name, model] : outputs.models)
                        save_model(model,
                                   spec.output_dir + "/model_" + name + "_" + tag + ".blm");
                    if (!quiet)
                        std::cout << "run " << tag << ": " << outputs.results.size()
                                  << " schemes done\n";
                } catch (const std::exception& e) {
                    error_rows.push_back(tag + ",run," + e.what());
                }
            }
        }
    }

    write_results_csv(summary.results, spec.output_dir + "/results.csv", spec.sweep_param,
                      summary.sweep_values_per_result);
    {
        std::ofstream echo(spec.output_dir + "/spec_echo.ini");
        echo << serialize_spec(spec);
    }
    if (!error_rows.empty()) {
        std::ofstream err(spec.output_dir + "/errors.csv");
        err << "run,scheme,message\n";
        for (const auto& row : error_rows) err << row << '\n';
    }
    summary.errors = static_cast<int>(error_rows.size());
    return summary;
}

}  // namespace cfbeam
