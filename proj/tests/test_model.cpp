#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "difsim/model.hpp"
#include "difsim/rng.hpp"
#include "helpers.hpp"

using namespace difsim;

namespace {

ModelConfig small_config(std::vector<std::size_t> sizes, Activation act, LossKind loss,
                         std::uint64_t seed) {
    ModelConfig mc;
    mc.layer_sizes = std::move(sizes);
    mc.activation = act;
    mc.loss_kind = loss;
    mc.seed = seed;
    return mc;
}

// overwrite all parameters with fixed values for hand calculations
void set_params(Mlp& net, const std::vector<Matrix>& ws, const std::vector<VecD>& bs) {
    net.state().params.weights = ws;
    net.state().params.biases = bs;
}

}  // namespace

TEST_CASE("constructor rejects malformed configurations", "[model]") {
    CHECK_THROWS_AS(Mlp(small_config({3}, Activation::relu, LossKind::cross_entropy, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(Mlp(small_config({3, 0, 2}, Activation::relu, LossKind::cross_entropy, 0)),
                    std::invalid_argument);
    ModelConfig mc = small_config({3, 2}, Activation::relu, LossKind::cross_entropy, 0);
    mc.dropout_rate = 1.0;
    CHECK_THROWS_AS(Mlp(mc), std::invalid_argument);
    mc.dropout_rate = -0.1;
    CHECK_THROWS_AS(Mlp(mc), std::invalid_argument);
}

TEST_CASE("initialization: zero biases, bounded weights, seed-reproducible", "[model]") {
    ModelConfig mc = small_config({4, 6, 3}, Activation::tanh, LossKind::cross_entropy, 77);
    Mlp a(mc), b(mc);
    CHECK(a.state() == b.state());

    mc.seed = 78;
    Mlp c(mc);
    CHECK_FALSE(a.state().params == c.state().params);

    const auto& p = a.state().params;
    REQUIRE(p.weights.size() == 2);
    CHECK(p.weights[0].rows == 6);
    CHECK(p.weights[0].cols == 4);
    CHECK(p.weights[1].rows == 3);
    CHECK(p.weights[1].cols == 6);
    for (const VecD& bias : p.biases)
        for (double v : bias) CHECK(v == 0.0);
    const double a0 = std::sqrt(6.0 / (4.0 + 6.0));
    for (double v : p.weights[0].data) {
        CHECK(v >= -a0);
        CHECK(v <= a0);
    }
}

TEST_CASE("forward matches closed-form on a 1-1-1 tanh network", "[model]") {
    Mlp net(small_config({1, 1, 1}, Activation::tanh, LossKind::mean_squared_error, 0));
    set_params(net, {Matrix::from_rows({{1.2}}), Matrix::from_rows({{-2.0}})}, {{0.3}, {0.25}});
    Matrix batch = Matrix::from_rows({{0.7}});
    Matrix out = net.forward(batch, false);
    REQUIRE(out.rows == 1);
    REQUIRE(out.cols == 1);
    const double expected = 0.25 + (-2.0) * std::tanh(0.3 + 1.2 * 0.7);
    CHECK(out.at(0, 0) == expected);

    // squared-error head: mean over batch of 0.5*sum((out - onehot)^2)
    const double want_loss = 0.5 * (expected - 1.0) * (expected - 1.0);
    CHECK_THAT(net.loss(out, {0}), Catch::Matchers::WithinRel(want_loss, 1e-15));
}

TEST_CASE("cross-entropy head produces softmax probabilities", "[model]") {
    Mlp net(small_config({2, 2}, Activation::relu, LossKind::cross_entropy, 0));
    set_params(net, {Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}})}, {{0.0, 0.0}});
    Matrix out = net.forward(Matrix::from_rows({{0.2, -0.3}}), false);
    const double e0 = std::exp(0.2), e1 = std::exp(-0.3);
    CHECK_THAT(out.at(0, 0), Catch::Matchers::WithinRel(e0 / (e0 + e1), 1e-14));
    CHECK_THAT(out.at(0, 1), Catch::Matchers::WithinRel(e1 / (e0 + e1), 1e-14));
    CHECK_THAT(out.at(0, 0) + out.at(0, 1), Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(net.loss(out, {0}), Catch::Matchers::WithinRel(-std::log(e0 / (e0 + e1)), 1e-13));
}

TEST_CASE("hand-computed gradient on a linear squared-error unit", "[model]") {
    Mlp net(small_config({1, 1}, Activation::relu, LossKind::mean_squared_error, 0));
    set_params(net, {Matrix::from_rows({{0.5}})}, {{0.25}});
    Matrix batch = Matrix::from_rows({{0.7}});
    const double out = 0.25 + 0.5 * 0.7;
    Gradients g = net.gradient(batch, {0});
    CHECK(g.weights[0].at(0, 0) == (out - 1.0) * 0.7);
    CHECK(g.biases[0][0] == out - 1.0);

    // leverage score is the euclidean norm of that per-sample gradient
    const double want = std::abs(out - 1.0) * std::sqrt(0.7 * 0.7 + 1.0);
    CHECK_THAT(net.leverage_score({0.7}, 0), Catch::Matchers::WithinRel(want, 1e-15));
}

TEST_CASE("backprop agrees with central finite differences", "[model][gradcheck]") {
    RandomStream rs(2024);
    int checked = 0;
    for (int attempt = 0; attempt < 400 && checked < 8; ++attempt) {
        std::vector<std::size_t> sizes;
        sizes.push_back(1 + rs.index(4));
        const std::size_t hidden = rs.index(3);
        for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(1 + rs.index(5));
        sizes.push_back(2 + rs.index(2));

        ModelConfig mc = small_config(sizes, static_cast<Activation>(checked % 3),
                                      (checked % 2) ? LossKind::mean_squared_error
                                                    : LossKind::cross_entropy,
                                      5000 + static_cast<std::uint64_t>(attempt));
        Mlp net(mc);

        const std::size_t bsz = 1 + rs.index(3);
        Matrix batch(bsz, sizes.front());
        for (double& v : batch.data) v = rs.uniform(-1.5, 1.5);
        std::vector<int> labels;
        for (std::size_t r = 0; r < bsz; ++r)
            labels.push_back(static_cast<int>(rs.index(sizes.back())));

        // keep finite-difference probes away from the relu kink
        if (mc.activation == Activation::relu &&
            testutil::min_preactivation_margin(net, batch) < 1e-3)
            continue;

        Gradients bp = net.gradient(batch, labels, false);
        Gradients fd = testutil::fd_gradients(net, batch, labels, 1e-5);
        REQUIRE(testutil::max_grad_rel_error(bp, fd) < 1e-4);
        ++checked;
    }
    REQUIRE(checked == 8);
}

TEST_CASE("batch gradient is the mean of per-sample gradients", "[model]") {
    ModelConfig mc = small_config({3, 4, 2}, Activation::sigmoid, LossKind::cross_entropy, 31);
    Mlp net(mc);
    RandomStream rs(9);
    Matrix batch(5, 3);
    for (double& v : batch.data) v = rs.uniform(-1.0, 1.0);
    std::vector<int> labels = {0, 1, 1, 0, 1};

    Gradients whole = net.gradient(batch, labels);
    Gradients mean = net.zero_like();
    for (std::size_t r = 0; r < batch.rows; ++r) {
        Gradients one = net.gradient(Matrix::from_rows({batch.row_vec(r)}), {labels[r]});
        for (std::size_t l = 0; l < mean.weights.size(); ++l) {
            for (std::size_t k = 0; k < mean.weights[l].data.size(); ++k)
                mean.weights[l].data[k] += one.weights[l].data[k] / 5.0;
            for (std::size_t k = 0; k < mean.biases[l].size(); ++k)
                mean.biases[l][k] += one.biases[l][k] / 5.0;
        }
    }
    CHECK(testutil::max_grad_rel_error(whole, mean, 1e-9) < 1e-12);
}

TEST_CASE("sgd step applies the plain update rule", "[model]") {
    Mlp net(small_config({1, 1}, Activation::relu, LossKind::mean_squared_error, 0));
    set_params(net, {Matrix::from_rows({{1.0}})}, {{0.0}});
    Gradients g = net.zero_like();
    g.weights[0].at(0, 0) = 0.5;
    g.biases[0][0] = -2.0;
    OptimizerConfig opt;
    opt.kind = OptimizerKind::sgd;
    opt.learning_rate = 0.1;
    net.optimizer_step(g, opt);
    CHECK(net.state().params.weights[0].at(0, 0) == 0.95);
    CHECK(net.state().params.biases[0][0] == 0.2);
    CHECK(net.state().step_count == 1);
    CHECK(net.state().adam_m.weights.empty());
}

TEST_CASE("first adam step moves by just under the learning rate", "[model]") {
    Mlp net(small_config({1, 1}, Activation::relu, LossKind::mean_squared_error, 0));
    set_params(net, {Matrix::from_rows({{1.0}})}, {{0.0}});
    Gradients g = net.zero_like();
    g.weights[0].at(0, 0) = 1.0;
    OptimizerConfig opt;
    opt.kind = OptimizerKind::adam;
    opt.learning_rate = 0.001;
    net.optimizer_step(g, opt);
    // bias correction makes the first step lr * g/(|g| + eps)
    CHECK_THAT(net.state().params.weights[0].at(0, 0),
               Catch::Matchers::WithinAbs(0.99900000001, 1e-15));
    CHECK(net.state().step_count == 1);
    CHECK_FALSE(net.state().adam_m.weights.empty());
    CHECK_FALSE(net.state().adam_v.weights.empty());
}

TEST_CASE("descent on a convex quadratic objective", "[model]") {
    // single linear layer with squared error is convex in the parameters
    Mlp net(small_config({2, 2}, Activation::relu, LossKind::mean_squared_error, 3));
    Matrix batch = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {0.5, -0.5}});
    std::vector<int> labels = {0, 1, 1, 0};
    OptimizerConfig opt;
    opt.kind = OptimizerKind::sgd;
    opt.learning_rate = 0.1;
    double prev = net.loss(net.forward(batch, false), labels);
    const double initial = prev;
    for (int step = 0; step < 200; ++step) {
        net.optimizer_step(net.gradient(batch, labels), opt);
        const double cur = net.loss(net.forward(batch, false), labels);
        if (step < 10) REQUIRE(cur < prev);
        prev = cur;
    }
    CHECK(prev < initial / 10.0);
}

TEST_CASE("well-separated clusters are fit to zero training error", "[model]") {
    RandomStream rs(17);
    std::vector<VecD> rows;
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        rows.push_back({rs.normal(0.0, 0.1), rs.normal(0.0, 0.1)});
        labels.push_back(0);
        rows.push_back({rs.normal(10.0, 0.1), rs.normal(10.0, 0.1)});
        labels.push_back(1);
    }
    Matrix batch = Matrix::from_rows(rows);
    Mlp net(small_config({2, 8, 2}, Activation::relu, LossKind::cross_entropy, 5));
    OptimizerConfig opt;
    opt.kind = OptimizerKind::adam;
    opt.learning_rate = 0.01;
    for (int step = 0; step < 200; ++step) net.optimizer_step(net.gradient(batch, labels), opt);

    Matrix out = net.forward(batch, false);
    int wrong = 0;
    for (std::size_t r = 0; r < out.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < out.cols; ++c)
            if (out.at(r, c) > out.at(r, best)) best = c;
        wrong += static_cast<int>(best) != labels[r] ? 1 : 0;
    }
    CHECK(wrong == 0);
}

TEST_CASE("dropout off at evaluation, active and rescaled in training", "[model]") {
    ModelConfig with = small_config({3, 16, 2}, Activation::relu, LossKind::cross_entropy, 21);
    with.dropout_rate = 0.5;
    ModelConfig without = with;
    without.dropout_rate = 0.0;
    Mlp dropped(with), plain(without);
    REQUIRE(dropped.state().params == plain.state().params);  // same init seed

    Matrix batch = Matrix::from_rows({{0.3, -0.2, 0.9}});

    // evaluation path ignores dropout entirely
    CHECK(dropped.forward(batch, false) == plain.forward(batch, false));
    CHECK(testutil::max_grad_rel_error(dropped.gradient(batch, {1}, false),
                                       plain.gradient(batch, {1}, false), 1e-9) == 0.0);

    // training path draws masks: repeated calls disagree somewhere
    bool varied = false;
    Matrix first = dropped.forward(batch, true);
    for (int i = 0; i < 16 && !varied; ++i) varied = !(dropped.forward(batch, true) == first);
    CHECK(varied);

    // inverted scaling keeps the training-time mean close to the eval output
    const double eval0 = plain.forward(batch, false).at(0, 0);
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += dropped.forward(batch, true).at(0, 0);
    CHECK_THAT(acc / n, Catch::Matchers::WithinAbs(eval0, 0.05));
}

TEST_CASE("argument validation on the hot paths", "[model]") {
    Mlp net(small_config({2, 2}, Activation::relu, LossKind::cross_entropy, 0));
    Matrix wrong_dim(1, 3);
    CHECK_THROWS_AS(net.forward(wrong_dim, false), std::invalid_argument);
    Matrix ok = Matrix::from_rows({{0.1, 0.2}});
    CHECK_THROWS_AS(net.gradient(ok, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(net.gradient(ok, {2}), std::out_of_range);
    CHECK_THROWS_AS(net.gradient(Matrix(0, 2), {}), std::invalid_argument);
    CHECK_THROWS_AS(net.loss(net.forward(ok, false), {0, 0}), std::invalid_argument);

    Mlp other(small_config({3, 2}, Activation::relu, LossKind::cross_entropy, 0));
    OptimizerConfig opt;
    CHECK_THROWS_AS(net.optimizer_step(other.zero_like(), opt), std::invalid_argument);
    opt.learning_rate = 0.0;
    CHECK_THROWS_AS(net.optimizer_step(net.zero_like(), opt), std::invalid_argument);
}
