#include "helpers.hpp"
#include "pcbias/datagen.hpp"
#include "pcbias/relu2.hpp"

#include <doctest.h>

#include <cmath>

using namespace pcbias;
using namespace pcbias::test;

TEST_CASE("paired init is linear") {
    const auto net = init_relu2(20, 6, 1, 0.3);
    for (int i = 0; i < 20; i += 2) {
        CHECK(max_abs(net.W.row(i) + net.W.row(i + 1)) == 0.0);
        CHECK(net.a(i) + net.a(i + 1) == 0.0);
    }
    // relu(u) - relu(-u) = u
    Vector g = Vector::Zero(6);
    for (int i = 0; i < 20; i += 2) g += net.a(i) * net.W.row(i).transpose();
    const Matrix X = random_matrix(6, 200, 2);
    CHECK(max_abs(forward_relu2(net, X) - X.transpose() * g) < 1e-10);

    const auto again = init_relu2(20, 6, 1, 0.3);
    CHECK(max_abs(again.W - net.W) == 0.0);
    CHECK(max_abs(again.a - net.a) == 0.0);
    CHECK_THROWS_AS(init_relu2(5, 6, 1, 0.3), ValidationError);
}

TEST_CASE("relu forward") {
    auto net = init_relu2(8, 4, 3, 1.0);
    CHECK(forward_relu2(net, Vector(Vector::Zero(4))) == 0.0);

    net.W = random_matrix(8, 4, 4).cwiseAbs();
    const Vector x = random_matrix(4, 1, 5).cwiseAbs();
    CHECK(forward_relu2(net, x) == doctest::Approx(net.a.dot(net.W * x)).epsilon(1e-14));

    net.W = random_matrix(8, 4, 6);
    const Matrix X = random_matrix(4, 10, 7);
    const Vector f = forward_relu2(net, X);
    for (int i = 0; i < 10; ++i) {
        double s = 0;
        for (int r = 0; r < 8; ++r) {
            double u = 0;
            for (int j = 0; j < 4; ++j) u += net.W(r, j) * X(j, i);
            s += net.a(r) * (u > 0 ? u : 0.0);
        }
        CHECK(std::abs(f(i) - s) < 1e-12);
    }
}

TEST_CASE("relu gradient") {
    auto net = init_relu2(6, 3, 8, 0.5);
    net.W = random_matrix(6, 3, 9);
    const Matrix X = random_matrix(3, 15, 10);
    Vector y(15);
    for (int i = 0; i < 15; ++i) y(i) = i % 2 ? 1.0 : -1.0;
    const Matrix G = relu2_gradient(net, X, y);
    for (int r = 0; r < 6; ++r)
        for (int j = 0; j < 3; ++j) {
            auto p = net, q = net;
            p.W(r, j) += 1e-6;
            q.W(r, j) -= 1e-6;
            const double fd = (relu2_loss(p, X, y) - relu2_loss(q, X, y)) / 2e-6;
            CHECK(std::abs(fd - G(r, j)) < 1e-6 * std::max(1.0, std::abs(fd)));
        }

    const auto before = net.W;
    train_relu2(net, X, y, 0.0, 3);
    CHECK(max_abs(net.W - before) == 0.0);
}

TEST_CASE("one hand-computed relu step") {
    ReLU2Net net{(Matrix(2, 2) << 1, 0, -1, 0).finished(), (Vector(2) << 1, -1).finished()};
    const Matrix X = (Matrix(2, 1) << 1, 2).finished();
    const Vector y = (Vector(1) << -1).finished();
    // f = 1, residual 2; only row 0 is active
    train_relu2(net, X, y, 0.1, 1);
    CHECK(net.W(0, 0) == doctest::Approx(0.8));
    CHECK(net.W(0, 1) == doctest::Approx(-0.4));
    CHECK(net.W(1, 0) == -1.0);
    CHECK(net.W(1, 1) == 0.0);
}

TEST_CASE("early-training update prediction") {
    SpectrumSpec spec;
    spec.q = 8;
    spec.n_per_class = 2000;
    spec.profile = make_profile("powerlaw:1", 8);
    spec.signal = signal_law(spec.profile, 8, 1.0, 0.5);
    const Dataset d = symmetric_binary(spec, 11);
    const Vector y = d.signed_labels();
    auto net = init_relu2(16, 8, 12, 1e-3);
    const Matrix pred = predicted_update_thm5(net, d.X, y, 1e-4);
    const Matrix before = net.W;
    train_relu2(net, d.X, y, 1e-4, 1);
    const Matrix exact = net.W - before;
    CHECK((pred - exact).norm() / exact.norm() < 0.1);

    auto zero = net;
    zero.a.setZero();
    CHECK(max_abs(predicted_update_thm5(zero, d.X, y, 1e-4)) == 0.0);
}

TEST_CASE("fully active row uses the full class-sum difference") {
    const Matrix X = random_matrix(3, 12, 13).cwiseAbs();
    Vector y(12);
    for (int i = 0; i < 12; ++i) y(i) = i < 5 ? 1.0 : -1.0;
    ReLU2Net net{Matrix::Zero(2, 3), (Vector(2) << 0.5, -0.5).finished()};
    net.W.row(0) << 1, 1, 1;
    net.W.row(1) << -1, -1, -1;
    const Matrix P = predicted_update_thm5(net, X, y, 0.1);
    const Eigen::RowVectorXd lin = 0.25 * (net.a.transpose() * net.W) * (X * X.transpose());
    const Eigen::RowVectorXd m = (X * y).transpose();
    CHECK(max_abs(P.row(0) - (-0.1 * 0.5 * (lin - m))) < 1e-12);
}
