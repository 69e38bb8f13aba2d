#include <doctest.h>

#include "censoring/errors.hpp"
#include "censoring/nn/adamw.hpp"
#include "censoring/nn/layers.hpp"
#include "censoring/nn/loss.hpp"
#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"
#include "support/finite_difference.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

using namespace censoring;
using namespace censoring::nn;
using censoring::testing::central_differences;
using censoring::testing::max_relative_error;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

double true_largest_singular_value(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
    return Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues()(0);
}

// Sum(out * R): upstream gradient is exactly R.
double projected_output(Sequential& net, const Matrix& x, const Matrix& r) {
    Matrix y = net.infer(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
    return s;
}

double check_network_gradients(Sequential& net, Matrix x, RngStream& rng) {
    Matrix y = net.forward(x);
    Matrix r = random_matrix(y.rows(), y.cols(), rng);
    net.zero_grad();
    Matrix gx = net.backward(r);

    double worst = 0.0;
    auto loss = [&] { return projected_output(net, x, r); };
    for (auto& p : net.params("net")) {
        std::vector<double> analytic(p.grads.begin(), p.grads.end());
        auto numeric = central_differences(p.values, loss);
        worst = std::max(worst, max_relative_error(analytic, numeric));
    }
    auto numeric_x = central_differences(x.data(), loss);
    worst = std::max(worst, max_relative_error(gx.data(), numeric_x));
    return worst;
}

}  // namespace

TEST_CASE("dense_forward examples") {
    RngStream rng(1, 0);
    DenseLayer identity(Matrix{{1, 0}, {0, 1}}, {0, 0}, Activation::identity);
    CHECK(identity.infer(Matrix{{1, 2}}) == Matrix{{1, 2}});

    DenseLayer relu(Matrix{{1, 0}, {0, 1}}, {-3, 0}, Activation::relu);
    CHECK(relu.infer(Matrix{{1, 2}}) == Matrix{{0, 2}});

    DenseLayer affine(Matrix{{2, 1}}, {0.5}, Activation::identity);
    CHECK(affine.infer(Matrix{{1, 3}})(0, 0) == doctest::Approx(5.5));

    SUBCASE("shape mismatch names both shapes") {
        try {
            (void)affine.infer(Matrix{{1, 2, 3}});
            FAIL("expected ShapeError");
        } catch (const ShapeError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("(1x3)") != std::string::npos);
            CHECK(msg.find("2") != std::string::npos);
        }
    }
}

TEST_CASE("backward of a single identity dense layer") {
    RngStream rng(2, 0);
    Sequential net;
    net.add(DenseLayer(3, 2, Activation::identity, rng));
    Matrix x = random_matrix(4, 3, rng);
    net.forward(x);
    Matrix g = random_matrix(4, 2, rng);
    net.backward(g);
    const auto& dense = std::get<DenseLayer>(net.layers()[0]);
    Matrix expected = transposed_matmul(g, x);  // G^T x
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(dense.weight_grad().data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("zero upstream gradient gives zero gradients") {
    RngStream rng(3, 0);
    std::vector<std::size_t> hidden{5, 4};
    Sequential net = make_mlp(3, hidden, 2, rng);
    Matrix x = random_matrix(6, 3, rng);
    net.forward(x);
    Matrix gx = net.backward(Matrix(6, 2));
    for (double v : gx.data()) CHECK(v == 0.0);
    for (auto& p : net.params("n"))
        for (double v : p.grads) CHECK(v == 0.0);
}

TEST_CASE("backward without forward is an error") {
    RngStream rng(4, 0);
    std::vector<std::size_t> hidden{3};
    Sequential net = make_mlp(2, hidden, 1, rng);
    CHECK_THROWS_AS(net.backward(Matrix(1, 1)), std::logic_error);
}

TEST_CASE("finite-difference agreement for every layer type") {
    RngStream rng(5, 0);

    SUBCASE("two-layer relu MLP") {
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<std::size_t> hidden{6};
            Sequential net = make_mlp(4, hidden, 3, rng);
            CHECK(check_network_gradients(net, random_matrix(5, 4, rng), rng) < 1e-6);
        }
    }
    SUBCASE("conv1d stack with pooling") {
        for (int trial = 0; trial < 3; ++trial) {
            Sequential net;
            net.add(Conv1DLayer(2, 3, 3, 2, 11, Activation::relu, rng));
            net.add(Conv1DLayer(3, 2, 2, 1, 5, Activation::identity, rng));
            net.add(GlobalAvgPool1D(2, 4));
            net.add(DenseLayer(2, 2, Activation::identity, rng));
            CHECK(check_network_gradients(net, random_matrix(3, 22, rng), rng) < 1e-6);
        }
    }
    SUBCASE("spectrally normalized dense stack") {
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<std::size_t> hidden{5, 5};
            Sequential net = make_mlp(3, hidden, 1, rng);
            net.enable_spectral_norm(rng);
            net.refresh_spectral_norm(3);
            CHECK(check_network_gradients(net, random_matrix(4, 3, rng), rng) < 1e-6);
        }
    }
}

TEST_CASE("conv1d output length") {
    RngStream rng(6, 0);
    Conv1DLayer conv(1, 1, 3, 2, 10, Activation::identity, rng);
    CHECK(conv.output_length() == 4);  // floor((10 - 3) / 2) + 1
    CHECK_THROWS_AS(Conv1DLayer(1, 1, 0, 1, 10, Activation::identity, rng), ShapeError);
    CHECK_THROWS_AS(Conv1DLayer(1, 1, 3, 0, 10, Activation::identity, rng), ShapeError);
    CHECK_THROWS_AS(Conv1DLayer(1, 1, 5, 1, 4, Activation::identity, rng), ShapeError);
}

TEST_CASE("softmax_cross_entropy examples") {
    const int zero[] = {0};
    const int two[] = {2};
    CHECK(softmax_cross_entropy(Matrix{{0, 0}}, zero).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    auto saturated = softmax_cross_entropy(Matrix{{1000, 0}}, zero);
    CHECK(std::isfinite(saturated.loss));
    CHECK(saturated.loss == doctest::Approx(0.0));
    const double expected = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0;
    CHECK(expected == doctest::Approx(0.407606).epsilon(1e-6));
    CHECK(softmax_cross_entropy(Matrix{{1, 2, 3}}, two).loss == doctest::Approx(expected).epsilon(1e-12));

    const int bad[] = {3};
    CHECK_THROWS_AS(softmax_cross_entropy(Matrix{{1, 2, 3}}, bad), std::out_of_range);
}

TEST_CASE("softmax rows are normalized and cross-entropy is non-negative") {
    RngStream rng(7, 0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix logits = random_matrix(5, 4, rng);
        scale_in_place(logits, 10.0);
        Matrix p = softmax(logits);
        for (std::size_t r = 0; r < p.rows(); ++r) {
            double s = 0.0;
            for (double v : p.row(r)) s += v;
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
        std::vector<int> labels(5);
        for (auto& l : labels) l = static_cast<int>(rng.below(4));
        CHECK(softmax_cross_entropy(logits, labels).loss >= 0.0);
    }
    const int labels[] = {0, 1, 2};
    CHECK(softmax_cross_entropy(Matrix(3, 3, 0.7), labels).loss == doctest::Approx(std::log(3.0)).epsilon(1e-15));
}

TEST_CASE("loss gradients match finite differences") {
    RngStream rng(8, 0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix logits = random_matrix(4, 3, rng);
        std::vector<int> labels(4);
        for (auto& l : labels) l = static_cast<int>(rng.below(3));
        auto analytic = softmax_cross_entropy(logits, labels).grad;
        auto numeric = central_differences(logits.data(), [&] { return softmax_cross_entropy(logits, labels).loss; });
        CHECK(max_relative_error(analytic.data(), numeric) < 1e-6);

        Matrix z = random_matrix(6, 1, rng);
        std::vector<double> signs(6);
        for (auto& s : signs) s = rng.uniform() < 0.5 ? -1.0 : 1.0;
        auto la = logistic_terms(z, signs).grad;
        auto ln = central_differences(z.data(), [&] { return logistic_terms(z, signs).loss; });
        CHECK(max_relative_error(la.data(), ln) < 1e-6);
    }
}

TEST_CASE("logistic_terms examples") {
    const double plus[] = {1.0};
    const double minus[] = {-1.0};
    CHECK(logistic_terms(Matrix{{0}}, plus).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    auto sat = logistic_terms(Matrix{{40}}, plus);
    CHECK(sat.loss > 0.0);
    CHECK(sat.loss < 1e-16);
    CHECK(logistic_terms(Matrix{{1}}, minus).loss == doctest::Approx(1.313262).epsilon(1e-6));
    CHECK(logistic_terms(Matrix{{1}}, minus).loss == doctest::Approx(std::log1p(std::exp(1.0))).epsilon(1e-14));
    CHECK_THROWS_AS(logistic_terms(Matrix{{std::nan("")}}, plus), NumericError);
}

TEST_CASE("adamw_step examples") {
    auto run_one = [](double w0, double g0, AdamWConfig cfg) {
        std::vector<double> w{w0};
        std::vector<double> g{g0};
        std::vector<ParamRef> params{{"w", {1}, w, g}};
        AdamW opt(cfg);
        opt.step(params);
        CHECK(opt.step_count() == 1);
        return w[0];
    };
    AdamWConfig no_decay{.lr = 0.1, .weight_decay = 0.0};
    CHECK(run_one(1.0, 0.0, no_decay) == 1.0);
    // m_hat = 1, v_hat = 1, update = lr * 1 / (1 + eps)
    CHECK(run_one(1.0, 1.0, no_decay) == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(run_one(1.0, 1.0, no_decay) == doctest::Approx(0.9).epsilon(1e-7));
    AdamWConfig decay{.lr = 0.1, .weight_decay = 0.1};
    CHECK(run_one(1.0, 0.0, decay) == doctest::Approx(0.99).epsilon(1e-15));

    SUBCASE("shape mismatch") {
        std::vector<double> w{1, 2};
        std::vector<double> g{0, 0};
        std::vector<ParamRef> params{{"w", {2}, w, g}};
        AdamW opt(no_decay);
        opt.step(params);
        std::vector<double> w3{1, 2, 3};
        std::vector<double> g3{0, 0, 0};
        std::vector<ParamRef> other{{"w", {3}, w3, g3}};
        CHECK_THROWS_AS(opt.step(other), ShapeError);
    }
}

TEST_CASE("adamw with zero gradient and no decay is the identity") {
    RngStream rng(9, 0);
    std::vector<double> w(10);
    for (auto& v : w) v = rng.normal();
    const auto original = w;
    std::vector<double> g(10, 0.0);
    std::vector<ParamRef> params{{"w", {10}, w, g}};
    AdamW opt({.lr = 0.05, .weight_decay = 0.0});
    for (int i = 0; i < 25; ++i) opt.step(params);
    CHECK(w == original);
    for (const auto& v : opt.second_moments()[0]) CHECK(v >= 0.0);
}

TEST_CASE("spectral_normalize examples") {
    RngStream rng(10, 0);
    SpectralNormState state{random_unit_vector(2, rng), 50};
    auto diag = spectral_normalize(Matrix{{3, 0}, {0, 1}}, state);
    CHECK(diag.sigma == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(diag.normalized(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(diag.normalized(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    double un = std::sqrt(state.u[0] * state.u[0] + state.u[1] * state.u[1]);
    CHECK(std::abs(un - 1.0) < 1e-9);

    SpectralNormState unit_state{random_unit_vector(2, rng), 50};
    Matrix rot{{std::cos(0.3), -std::sin(0.3)}, {std::sin(0.3), std::cos(0.3)}};
    auto unit = spectral_normalize(rot, unit_state);
    for (std::size_t i = 0; i < rot.size(); ++i) CHECK(std::abs(unit.normalized.data()[i] - rot.data()[i]) < 1e-6);

    // [[2,1],[1,2]] has eigenvalues 3 and 1, so sigma = 3; the error shrinks with iterations.
    Matrix sym{{2, 1}, {1, 2}};
    SpectralNormState s{{1.0, 0.0}, 1};
    double prev_err = 1e9;
    for (int it = 0; it < 30; ++it) {
        const double err = std::abs(spectral_normalize(sym, s).sigma - 3.0);
        CHECK(err <= prev_err + 1e-15);
        prev_err = err;
    }
    CHECK(prev_err < 1e-9);

    SpectralNormState zs{{1.0, 0.0}, 5};
    CHECK_THROWS_AS(spectral_normalize(Matrix(2, 2), zs), std::invalid_argument);
}

TEST_CASE("spectral normalization bounds the true top singular value") {
    RngStream rng(11, 0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix w = random_matrix(6, 4, rng);
        SpectralNormState state{random_unit_vector(6, rng), 60};
        auto result = spectral_normalize(w, state);
        const double sv = true_largest_singular_value(result.normalized);
        CHECK(sv >= 1.0 - 1e-3);
        CHECK(sv <= 1.0 + 1e-3);
    }
}

TEST_CASE("rng streams are reproducible and distinct") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    RngStream c(42, 8);
    int same_as_c = 0;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        if (va == c.next_u64()) ++same_as_c;
    }
    CHECK(same_as_c == 0);

    // Resuming from the counter reproduces the tail of the sequence.
    RngStream d(42, 7);
    for (int i = 0; i < 10; ++i) d.next_u64();
    RngStream e(42, 7, d.counter());
    CHECK(d.next_u64() == e.next_u64());

    RngStream u(3, 3);
    double mean = 0.0;
    double sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = u.normal();
        mean += x;
        sq += x * x;
    }
    mean /= n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(sq / n - 1.0) < 0.02);

    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[u.below(5)];
    for (int cnt : counts) CHECK(std::abs(cnt - 10000) < 500);
}

TEST_CASE("training steps are bit-identical under identical streams") {
    auto train = [] {
        RngStream init(77, 1);
        std::vector<std::size_t> hidden{8};
        Sequential net = make_mlp(3, hidden, 2, init);
        AdamW opt({.lr = 1e-2});
        RngStream data(77, 2);
        for (int step = 0; step < 20; ++step) {
            Matrix x = random_matrix(8, 3, data);
            std::vector<int> y(8);
            for (auto& l : y) l = static_cast<int>(data.below(2));
            net.zero_grad();
            auto loss = softmax_cross_entropy(net.forward(x), y);
            net.backward(loss.grad);
            opt.step(net.params("n"));
        }
        std::vector<double> flat;
        for (auto& p : net.params("n")) flat.insert(flat.end(), p.values.begin(), p.values.end());
        return flat;
    };
    CHECK(train() == train());
}
