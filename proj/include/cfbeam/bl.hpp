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

#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/dataset.hpp"
#include "cfbeam/rng.hpp"
#include "cfbeam/types.hpp"

namespace cfbeam {

/// Broad-learning network shape: I groups of F linear feature nodes, J
/// groups of E tansig enhancement nodes, ridge coefficient lambda. The
/// enhancement width follows the dataset size by default (500 below 1000
/// samples, 1500 from 1000 up).
struct BLArchitecture {
    int feature_groups = 10;        // I
    int feature_nodes = 20;         // F per group
    int enhancement_groups = 1;     // J
    int enhancement_nodes = 500;    // E per group
    double lambda = 0.125;          // 2^-3 (user-side default; BS-side uses 2^-9)
    std::uint64_t weight_seed = 7;

    static int default_enhancement_nodes(int n_samples) { return n_samples < 1000 ? 500 : 1500; }

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        if (feature_groups < 1 || feature_nodes < 1 || enhancement_groups < 1 ||
            enhancement_nodes < 1)
            errs.push_back("arch: I, F, J, E must all be >= 1");
        if (!(lambda > 0.0)) errs.push_back("arch.lambda: must be > 0");
        return errs;
    }
};

inline double tansig(double x) { return std::tanh(x); }  // 2/(1+e^{-2x}) - 1

/// Frozen random layers. Regenerated bitwise-identically from weight_seed;
/// never modified by training. Enhancement groups added later continue the
/// same seed stream (group j always draws from the same child stream no
/// matter when it is materialized).
struct BLRandomLayers {
    int input_dim = 0;
    std::vector<Mat> w_feature;     // I of input_dim x F
    std::vector<RowVec> b_feature;  // I of 1 x F
    std::vector<Mat> w_enhance;     // per group: (I*F) x E_j
    std::vector<RowVec> b_enhance;
    std::vector<int> enhancement_sizes;

    int feature_dim() const {
        return static_cast<int>(w_feature.size()) *
               (w_feature.empty() ? 0 : static_cast<int>(w_feature[0].cols()));
    }
    int enhancement_dim() const {
        int d = 0;
        for (const int e : enhancement_sizes) d += e;
        return d;
    }
    int total_dim() const { return feature_dim() + enhancement_dim(); }
};

namespace detail {
inline void fill_uniform(Mat& m, SplitRng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-1.0, 1.0);
}
inline void fill_uniform(RowVec& v, SplitRng& rng) {
    for (Eigen::Index c = 0; c < v.size(); ++c) v(c) = rng.uniform(-1.0, 1.0);
}
}  // namespace detail

/// Weights of enhancement group `group_index` (continuing the seed stream).
inline void make_enhancement_group(BLRandomLayers& layers, const BLArchitecture& arch,
                                   int group_index, int nodes) {
    SplitRng rng = SplitRng(arch.weight_seed).split("enhancement-layer",
                                                    static_cast<std::uint64_t>(group_index));
    Mat w(layers.feature_dim(), nodes);
    RowVec b(nodes);
    detail::fill_uniform(w, rng);
    detail::fill_uniform(b, rng);
    layers.w_enhance.push_back(std::move(w));
    layers.b_enhance.push_back(std::move(b));
    layers.enhancement_sizes.push_back(nodes);
}

/// Draw all random layers, entries i.i.d. uniform on [-1, 1].
inline BLRandomLayers init_layers(const BLArchitecture& arch, int input_dim) {
    if (input_dim < 1) throw std::invalid_argument("init_layers: input_dim must be >= 1");
    BLRandomLayers layers;
    layers.input_dim = input_dim;
    const SplitRng root(arch.weight_seed);
    for (int i = 0; i < arch.feature_groups; ++i) {
        SplitRng rng = root.split("feature-layer", static_cast<std::uint64_t>(i));
        Mat w(input_dim, arch.feature_nodes);
        RowVec b(arch.feature_nodes);
        detail::fill_uniform(w, rng);
        detail::fill_uniform(b, rng);
        layers.w_feature.push_back(std::move(w));
        layers.b_feature.push_back(std::move(b));
    }
    for (int j = 0; j < arch.enhancement_groups; ++j)
        make_enhancement_group(layers, arch, j, arch.enhancement_nodes);
    return layers;
}

/// Linear feature nodes Z = [Z_1 .. Z_I], Z_i = X W_i + 1 b_i.
inline Mat feature_nodes(const Mat& x, const BLRandomLayers& layers) {
    if (x.cols() != layers.input_dim)
        throw std::invalid_argument("feature_nodes: input dimension mismatch");
    Mat z(x.rows(), layers.feature_dim());
    int col = 0;
    for (std::size_t i = 0; i < layers.w_feature.size(); ++i) {
        const int f = static_cast<int>(layers.w_feature[i].cols());
        z.middleCols(col, f) = (x * layers.w_feature[i]).rowwise() + layers.b_feature[i];
        col += f;
    }
    return z;
}

/// Enhancement nodes of one group: tansig(Z W + 1 b).
inline Mat enhancement_nodes(const Mat& z, const Mat& w, const RowVec& b) {
    if (z.cols() != w.rows())
        throw std::invalid_argument("enhancement_nodes: dimension mismatch");
    return ((z * w).rowwise() + b).array().tanh();
}

/// Joint node output A = [Z | H].
inline Mat map_nodes(const Mat& x, const BLRandomLayers& layers) {
    const Mat z = feature_nodes(x, layers);
    Mat a(x.rows(), layers.total_dim());
    a.leftCols(z.cols()) = z;
    int col = static_cast<int>(z.cols());
    for (std::size_t j = 0; j < layers.w_enhance.size(); ++j) {
        const int e = layers.enhancement_sizes[j];
        a.middleCols(col, e) = enhancement_nodes(z, layers.w_enhance[j], layers.b_enhance[j]);
        col += e;
    }
    return a;
}

/// Ridge output weights W = (lambda I + A^T A)^(-1) A^T Y via an SPD solve.
inline Mat ridge_solve(const Mat& a, const Mat& y, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("ridge_solve: lambda must be > 0");
    if (a.rows() != y.rows()) throw std::invalid_argument("ridge_solve: row count mismatch");
    if (!a.allFinite() || !y.allFinite())
        throw std::invalid_argument("ridge_solve: non-finite inputs");
    Mat gram = a.transpose() * a;
    gram.diagonal().array() += lambda;
    return Eigen::LLT<Mat>(gram).solve(a.transpose() * y);
}

/// Explicit (shift I + A^T A)^(-1), the cache the incremental update
/// paths operate on.
inline Mat gram_inverse(const Mat& a, double shift) {
    Mat gram = a.transpose() * a;
    gram.diagonal().array() += shift;
    return Eigen::LLT<Mat>(gram).solve(Mat::Identity(gram.rows(), gram.cols()));
}

/// Relative normal-equation residual ||(lambda I + A^T A) W - A^T Y|| / ||A^T Y||.
inline double normal_equation_residual(const Mat& a, const Mat& y, double lambda, const Mat& w) {
    const Mat aty = a.transpose() * y;
    const Mat lhs = a.transpose() * (a * w) + lambda * w;
    return (lhs - aty).norm() / aty.norm();
}

struct GramCache {
    double shift = 0.0;  // the coefficient on I in the inverted matrix
    Mat inv;
};

/// Trained broad-learning model: frozen layers + ridge output weights,
/// with the input normalizer fitted on its training split.
struct BLModel {
    BLArchitecture arch;
    BLRandomLayers layers;
    Normalizer normalizer;
    Mat w_out;
    std::optional<GramCache> cache;

    bool trained() const { return w_out.size() > 0; }
    int output_dim() const { return static_cast<int>(w_out.cols()); }
};

/// Fit a local model (closed-form ridge on the mapped nodes).
inline BLModel train_model(const BLArchitecture& arch, const Mat& x_raw, const Mat& y,
                           bool want_cache = false) {
    BLModel m;
    m.arch = arch;
    m.layers = init_layers(arch, static_cast<int>(x_raw.cols()));
    m.normalizer = Normalizer::fit(x_raw);
    const Mat a = map_nodes(m.normalizer.apply(x_raw), m.layers);
    m.w_out = ridge_solve(a, y, arch.lambda);
    if (want_cache) m.cache = GramCache{arch.lambda, gram_inverse(a, arch.lambda)};
    return m;
}

/// Scores a W_out for one raw input row.
inline RowVec predict_scores(const BLModel& m, const RowVec& x_raw) {
    if (!m.trained()) throw std::logic_error("predict: model is untrained");
    const Mat a = map_nodes(m.normalizer.apply(x_raw), m.layers);
    return a * m.w_out;
}

/// First-max argmax inside each length-M block of a score row.
inline std::vector<int> block_argmax(const RowVec& scores, int num_blocks) {
    const int m = static_cast<int>(scores.size()) / num_blocks;
    std::vector<int> idx(num_blocks);
    for (int b = 0; b < num_blocks; ++b)
        idx[b] = argmax_first(scores.segment(b * m, m).transpose());
    return idx;
}

/// Predicted per-BS beam indices for one raw input.
inline std::vector<int> predict_indices(const BLModel& m, const RowVec& x_raw, int num_bs) {
    return block_argmax(predict_scores(m, x_raw), num_bs);
}

// ---- BLM1 model container --------------------------------------------------
// Sections: magic 'BLM1', version, architecture + seed (+ sizes of any added
// enhancement groups), normalizer, W_out, optional Gram-inverse cache.
// All scalars little-endian, matrices column-major 64-bit floats.

namespace detail {
template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("BLM1: truncated file");
    return v;
}
inline void put_mat(std::ostream& out, const Mat& m) {
    put<std::int64_t>(out, m.rows());
    put<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}
inline Mat get_mat(std::istream& in) {
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (1ll << 32))
        throw std::runtime_error("BLM1: implausible matrix dimensions");
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw std::runtime_error("BLM1: truncated matrix");
    return m;
}
}  // namespace detail

inline void save_model(const BLModel& m, const std::string& path) {
    if (!m.trained()) throw std::logic_error("save_model: model is untrained");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out.write("BLM1", 4);
    detail::put<std::uint32_t>(out, 1);
    detail::put<std::int64_t>(out, m.layers.input_dim);
    detail::put<std::int64_t>(out, m.arch.feature_groups);
    detail::put<std::int64_t>(out, m.arch.feature_nodes);
    detail::put<std::int64_t>(out, m.arch.enhancement_groups);
    detail::put<std::int64_t>(out, m.arch.enhancement_nodes);
    detail::put<double>(out, m.arch.lambda);
    detail::put<std::uint64_t>(out, m.arch.weight_seed);
    const auto n_added =
        static_cast<std::int64_t>(m.layers.enhancement_sizes.size()) - m.arch.enhancement_groups;
    detail::put<std::int64_t>(out, n_added);
    for (std::int64_t j = 0; j < n_added; ++j)
        detail::put<std::int64_t>(out,
                                  m.layers.enhancement_sizes[m.arch.enhancement_groups + j]);
    detail::put<std::int64_t>(out, m.normalizer.mean.size());
    out.write(reinterpret_cast<const char*>(m.normalizer.mean.data()),
              static_cast<std::streamsize>(sizeof(double) * m.normalizer.mean.size()));
    out.write(reinterpret_cast<const char*>(m.normalizer.inv_std.data()),
              static_cast<std::streamsize>(sizeof(double) * m.normalizer.inv_std.size()));
    detail::put_mat(out, m.w_out);
    detail::put<std::uint8_t>(out, m.cache.has_value() ? 1 : 0);
    if (m.cache) {
        detail::put<double>(out, m.cache->shift);
        detail::put_mat(out, m.cache->inv);
    }
}

inline BLModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "BLM1", 4) != 0)
        throw std::runtime_error("load_model: " + path + " is not a BLM1 container");
    if (detail::get<std::uint32_t>(in) != 1)
        throw std::runtime_error("load_model: unsupported BLM1 version");
    BLModel m;
    const auto input_dim = detail::get<std::int64_t>(in);
    m.arch.feature_groups = static_cast<int>(detail::get<std::int64_t>(in));
    m.arch.feature_nodes = static_cast<int>(detail::get<std::int64_t>(in));
    m.arch.enhancement_groups = static_cast<int>(detail::get<std::int64_t>(in));
    m.arch.enhancement_nodes = static_cast<int>(detail::get<std::int64_t>(in));
    m.arch.lambda = detail::get<double>(in);
    m.arch.weight_seed = detail::get<std::uint64_t>(in);
    const auto n_added = detail::get<std::int64_t>(in);
    std::vector<int> added(static_cast<std::size_t>(n_added));
    for (auto& e : added) e = static_cast<int>(detail::get<std::int64_t>(in));
    const auto norm_dim = detail::get<std::int64_t>(in);
    if (norm_dim != input_dim)
        throw std::runtime_error("load_model: normalizer dimension does not match input_dim");
    m.normalizer.mean.resize(norm_dim);
    m.normalizer.inv_std.resize(norm_dim);
    in.read(reinterpret_cast<char*>(m.normalizer.mean.data()),
            static_cast<std::streamsize>(sizeof(double) * norm_dim));
    in.read(reinterpret_cast<char*>(m.normalizer.inv_std.data()),
            static_cast<std::streamsize>(sizeof(double) * norm_dim));
    if (!in) throw std::runtime_error("load_model: truncated normalizer");

    m.layers = init_layers(m.arch, static_cast<int>(input_dim));
    for (std::size_t j = 0; j < added.size(); ++j)
        make_enhancement_group(m.layers, m.arch,
                               m.arch.enhancement_groups + static_cast<int>(j), added[j]);

    m.w_out = detail::get_mat(in);
    if (m.w_out.rows() != m.layers.total_dim())
        throw std::runtime_error("load_model: W_out rows do not match the node count");
    if (detail::get<std::uint8_t>(in)) {
        GramCache c;
        c.shift = detail::get<double>(in);
        c.inv = detail::get_mat(in);
        if (c.inv.rows() != m.layers.total_dim() || c.inv.cols() != m.layers.total_dim())
            throw std::runtime_error("load_model: cache dimensions do not match the node count");
        m.cache = std::move(c);
    }
    return m;
}

}  // namespace cfbeam
