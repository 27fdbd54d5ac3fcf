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

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "cfbeam/bl.hpp"

using namespace cfbeam;

namespace {
Mat randn(Eigen::Index r, Eigen::Index c, SplitRng& rng) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

/// Toy separable classification set: labels from the block argmax of a
/// planted linear map.
std::pair<Mat, Mat> toy_classification(int n, int dim, int blocks, int per_block,
                                       std::uint64_t seed) {
    SplitRng rng(seed);
    Mat x = randn(n, dim, rng);
    Mat w_true = randn(dim, blocks * per_block, rng);
    Mat scores = x * w_true;
    Mat y = Mat::Zero(n, blocks * per_block);
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < blocks; ++b)
            y(i, b * per_block +
                     argmax_first(scores.row(i).segment(b * per_block, per_block).transpose())) =
                1.0;
    return {x, y};
}
}  // namespace

TEST_CASE("layer initialization is deterministic and shaped as declared") {
    BLArchitecture arch;
    const BLRandomLayers a = init_layers(arch, 96);
    const BLRandomLayers b = init_layers(arch, 96);
    REQUIRE(a.w_feature[0] == b.w_feature[0]);
    REQUIRE(a.w_enhance[0] == b.w_enhance[0]);
    REQUIRE(a.w_feature.size() == 10);
    REQUIRE(a.w_feature[0].rows() == 96);
    REQUIRE(a.w_feature[0].cols() == 20);
    REQUIRE(a.w_enhance[0].rows() == 200);
    REQUIRE(a.w_enhance[0].cols() == 500);
    REQUIRE(a.total_dim() == 700);
}

TEST_CASE("layer weights are uniform on [-1, 1]") {
    BLArchitecture arch;
    const BLRandomLayers layers = init_layers(arch, 96);
    double sum = 0.0;
    int count = 0;
    double lo = 1.0, hi = -1.0;
    for (const auto& w : layers.w_feature)
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double v = w.data()[i];
            REQUIRE(v >= -1.0);
            REQUIRE(v <= 1.0);
            sum += v;
            ++count;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    REQUIRE(count >= 10000);
    REQUIRE(std::abs(sum / count) <= 0.02);
    REQUIRE(lo < -0.99);
    REQUIRE(hi > 0.99);
}

TEST_CASE("zero input with zero biases maps to zero nodes") {
    BLArchitecture arch;
    arch.feature_groups = 2;
    arch.feature_nodes = 3;
    arch.enhancement_nodes = 4;
    BLRandomLayers layers = init_layers(arch, 5);
    for (auto& b : layers.b_feature) b.setZero();
    for (auto& b : layers.b_enhance) b.setZero();
    const Mat a = map_nodes(Mat::Zero(7, 5), layers);
    REQUIRE(a.norm() == 0.0);  // tansig(0) = 0
}

TEST_CASE("feature nodes are exactly affine") {
    BLArchitecture arch;
    arch.feature_groups = 1;
    arch.feature_nodes = 4;
    BLRandomLayers layers = init_layers(arch, 3);
    SplitRng rng(5);
    const Mat x = randn(6, 3, rng);
    const Mat z = feature_nodes(x, layers);
    const Mat want = (x * layers.w_feature[0]).rowwise() + layers.b_feature[0];
    REQUIRE((z - want).norm() == 0.0);
}

TEST_CASE("enhancement nodes stay inside the tansig range") {
    BLArchitecture arch;
    BLRandomLayers layers = init_layers(arch, 12);
    SplitRng rng(6);
    // small inputs keep the pre-activation below tanh's double saturation point
    const Mat a = map_nodes(0.02 * randn(20, 12, rng), layers);
    const Mat h = a.rightCols(layers.enhancement_dim());
    REQUIRE(h.maxCoeff() < 1.0);
    REQUIRE(h.minCoeff() > -1.0);
    // large inputs saturate but never escape [-1, 1]
    const Mat a2 = map_nodes(50.0 * randn(20, 12, rng), layers);
    const Mat h2 = a2.rightCols(layers.enhancement_dim());
    REQUIRE(h2.maxCoeff() <= 1.0);
    REQUIRE(h2.minCoeff() >= -1.0);
}

TEST_CASE("ridge solve fits the identity") {
    const Mat a = Mat::Identity(4, 4);
    const Mat w = ridge_solve(a, Mat::Identity(4, 4), 1e-10);
    REQUIRE((w - Mat::Identity(4, 4)).norm() < 1e-8);
}

TEST_CASE("ridge solve matches a dense normal-equation solve") {
    SplitRng rng(7);
    const Mat a = randn(5, 3, rng);
    const Mat y = randn(5, 2, rng);
    const double lambda = 0.1;
    const Mat w = ridge_solve(a, y, lambda);
    Mat g = a.transpose() * a;
    g.diagonal().array() += lambda;
    const Mat ref = g.inverse() * (a.transpose() * y);
    REQUIRE((w - ref).norm() <= 1e-10 * ref.norm());
}

TEST_CASE("ridge solve recovers a planted solution") {
    SplitRng rng(8);
    const Mat a = randn(40, 10, rng);
    const Mat w_star = randn(10, 3, rng);
    const Mat w = ridge_solve(a, a * w_star, 1e-8);
    REQUIRE((w - w_star).norm() <= 1e-5 * w_star.norm());
}

TEST_CASE("ridge solve rejects non-finite input and bad lambda") {
    Mat a = Mat::Ones(3, 2);
    const Mat y = Mat::Ones(3, 1);
    REQUIRE_THROWS_AS(ridge_solve(a, y, 0.0), std::invalid_argument);
    a(1, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(ridge_solve(a, y, 0.1), std::invalid_argument);
}

TEST_CASE("trained models satisfy the normal-equation residual bound") {
    auto [x, y] = toy_classification(120, 8, 2, 4, 9);
    BLArchitecture arch;
    arch.enhancement_nodes = 40;
    const BLModel m = train_model(arch, x, y);
    const Mat a = map_nodes(m.normalizer.apply(x), m.layers);
    REQUIRE(normal_equation_residual(a, y, arch.lambda, m.w_out) <= 1e-8);
}

TEST_CASE("training never touches the frozen layers") {
    auto [x, y] = toy_classification(60, 6, 1, 3, 10);
    BLArchitecture arch;
    arch.enhancement_nodes = 20;
    const BLRandomLayers before = init_layers(arch, 6);
    const BLModel m = train_model(arch, x, y);
    REQUIRE(m.layers.w_feature[3] == before.w_feature[3]);
    REQUIRE(m.layers.w_enhance[0] == before.w_enhance[0]);
    REQUIRE(m.layers.b_enhance[0] == before.b_enhance[0]);
}

TEST_CASE("near-interpolating model memorizes a separable toy set") {
    auto [x, y] = toy_classification(50, 6, 2, 3, 11);
    BLArchitecture arch;
    arch.enhancement_nodes = 100;
    arch.lambda = 1e-8;
    const BLModel m = train_model(arch, x, y);
    int hits = 0;
    for (int i = 0; i < x.rows(); ++i) {
        const auto idx = predict_indices(m, x.row(i), 2);
        const auto want = block_argmax(y.row(i), 2);
        hits += (idx == want) ? 1 : 0;
    }
    REQUIRE(hits == x.rows());
}

TEST_CASE("block argmax picks the first maximum and ignores shifts") {
    RowVec s(3);
    s << 0.1, 0.9, 0.3;
    REQUIRE(block_argmax(s, 1) == std::vector<int>{1});
    RowVec ties = RowVec::Constant(4, 2.5);
    REQUIRE(block_argmax(ties, 1) == std::vector<int>{0});
    SplitRng rng(12);
    RowVec r(12);
    for (int i = 0; i < 12; ++i) r[i] = rng.normal();
    const auto base = block_argmax(r, 3);
    RowVec shifted = r;
    for (int b = 0; b < 3; ++b) shifted.segment(4 * b, 4).array() += 17.0 * (b + 1);
    REQUIRE(block_argmax(shifted, 3) == base);
}

TEST_CASE("prediction requires a trained model") {
    BLModel m;
    m.arch = BLArchitecture{};
    REQUIRE_THROWS_AS(predict_scores(m, RowVec::Zero(4)), std::logic_error);
}

TEST_CASE("test accuracy is stable across layer seeds") {
    // same dataset, five different random-layer realizations
    auto [x, y] = toy_classification(2000, 10, 2, 3, 13);
    const Mat x_train = x.topRows(1400), y_train = y.topRows(1400);
    const Mat x_test = x.bottomRows(600), y_test = y.bottomRows(600);
    std::vector<double> acc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        BLArchitecture arch;
        arch.enhancement_nodes = 150;
        arch.weight_seed = seed;
        const BLModel m = train_model(arch, x_train, y_train);
        const Mat scores = map_nodes(m.normalizer.apply(x_test), m.layers) * m.w_out;
        int hits = 0;
        for (int i = 0; i < x_test.rows(); ++i) {
            const auto got = block_argmax(scores.row(i), 2);
            const auto want = block_argmax(y_test.row(i), 2);
            for (int b = 0; b < 2; ++b) hits += (got[b] == want[b]) ? 1 : 0;
        }
        acc.push_back(static_cast<double>(hits) / (2.0 * x_test.rows()));
    }
    const double spread = *std::max_element(acc.begin(), acc.end()) -
                          *std::min_element(acc.begin(), acc.end());
    REQUIRE(spread <= 0.05);
}

TEST_CASE("BLM1 container round trip") {
    auto [x, y] = toy_classification(80, 7, 2, 3, 14);
    BLArchitecture arch;
    arch.enhancement_nodes = 30;
    BLModel m = train_model(arch, x, y, /*want_cache=*/true);
    make_enhancement_group(m.layers, m.arch, 1, 10);  // an added group must survive the trip
    m.w_out = Mat::Zero(m.layers.total_dim(), y.cols());
    m.cache = GramCache{arch.lambda, Mat::Identity(m.layers.total_dim(), m.layers.total_dim())};
    const std::string path = "model_roundtrip.blm";
    save_model(m, path);
    const BLModel back = load_model(path);
    REQUIRE(back.w_out == m.w_out);
    REQUIRE(back.normalizer.mean == m.normalizer.mean);
    REQUIRE(back.normalizer.inv_std == m.normalizer.inv_std);
    REQUIRE(back.layers.w_feature[0] == m.layers.w_feature[0]);
    REQUIRE(back.layers.w_enhance[1] == m.layers.w_enhance[1]);
    REQUIRE(back.cache.has_value());
    REQUIRE(back.cache->shift == m.cache->shift);
    REQUIRE(back.cache->inv == m.cache->inv);
    std::filesystem::remove(path);
}

TEST_CASE("BLM1 loader rejects corrupted containers") {
    auto [x, y] = toy_classification(40, 5, 1, 3, 15);
    BLArchitecture arch;
    arch.enhancement_nodes = 10;
    const BLModel m = train_model(arch, x, y);
    const std::string path = "model_corrupt.blm";
    save_model(m, path);
    SECTION("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
        f.close();
        REQUIRE_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("BLM1"));
    }
    SECTION("truncated payload") {
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 16);
        REQUIRE_THROWS_AS(load_model(path), std::runtime_error);
    }
    std::filesystem::remove(path);
}
