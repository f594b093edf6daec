#include "helpers.hpp"
#include "pcbias/linnet.hpp"
#include "pcbias/spectra.hpp"
#include "pcbias/theory.hpp"

#include <doctest.h>

#include <cmath>

using namespace pcbias;
using namespace pcbias::test;

TEST_CASE("std init variances") {
    const std::vector<int> w{10, 100, 100, 2};
    const auto s = layer_variances(w, InitScheme::Std);
    REQUIRE(s.size() == 3);
    CHECK(s[0] == doctest::Approx(1.0 / 100));
    CHECK(s[1] == doctest::Approx(2.0 / 200));
    CHECK(s[2] == doctest::Approx(1.0 / 100));

    // single layer: the output-layer rule 1/m_{L-1}
    const std::vector<int> one{7, 3};
    CHECK(layer_variances(one, InitScheme::Std)[0] == doctest::Approx(1.0 / 7));
}

TEST_CASE("init entry moments") {
    const std::vector<int> w{50, 400, 300, 2};
    const auto s = layer_variances(w, InitScheme::Std);
    for (auto dist : {InitDist::Uniform, InitDist::Gaussian}) {
        const auto net = init_network(w, InitScheme::Std, 31, dist);
        for (int l = 0; l < 2; ++l) {
            const Matrix& W = net.layers[l];
            const double n = static_cast<double>(W.size());
            const double mean = W.mean();
            const double var = (W.array() - mean).square().sum() / (n - 1);
            CHECK(std::abs(mean) < 3 * std::sqrt(s[l] / n));
            CHECK(std::abs(var / s[l] - 1) < 0.05);
        }
    }
    const auto a = init_network(w, InitScheme::Std, 5), b = init_network(w, InitScheme::Std, 5);
    for (int l = 0; l < 3; ++l) CHECK(max_abs(a.layers[l] - b.layers[l]) == 0.0);
}

TEST_CASE("compact representation and forward") {
    DeepLinearNet one{{3, 2}, {random_matrix(2, 3, 1)}};
    CHECK(max_abs(compact_representation(one) - one.layers[0]) == 0.0);

    DeepLinearNet two{{3, 2, 2}, {random_matrix(2, 3, 2), Matrix::Identity(2, 2)}};
    CHECK(max_abs(compact_representation(two) - two.layers[0]) == 0.0);

    const auto net = init_network(std::vector<int>{4, 5, 6, 3}, InitScheme::Std, 3);
    const Matrix &W1 = net.layers[0], &W2 = net.layers[1], &W3 = net.layers[2];
    Matrix naive = Matrix::Zero(3, 4);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 6; ++b)
            for (int c = 0; c < 5; ++c)
                for (int d = 0; d < 4; ++d) naive(a, d) += W3(a, b) * W2(b, c) * W1(c, d);
    CHECK(max_abs(compact_representation(net) - naive) < 1e-12);

    const Matrix X = random_matrix(4, 9, 4);
    CHECK(max_abs(forward(net, Matrix::Zero(4, 9))) == 0.0);
    CHECK(max_abs(forward(net, X) - W3 * (W2 * (W1 * X))) < 1e-10);
    DeepLinearNet eye{{3, 3}, {Matrix::Identity(3, 3)}};
    CHECK(max_abs(forward(eye, random_matrix(3, 2, 5)) - random_matrix(3, 2, 5)) == 0.0);
}

TEST_CASE("l2 loss") {
    Dataset d = random_dataset(3, 2, 8, 6);
    const Matrix Y = d.one_hot();
    CHECK(loss_from_logits(Y, d, LossKind::L2) == 0.0);
    CHECK(loss_from_logits(Matrix::Zero(2, 8), d, LossKind::L2) == doctest::Approx(4.0));

    const Matrix Z = random_matrix(2, 8, 7);
    double s = 0;
    for (int i = 0; i < 8; ++i)
        for (int c = 0; c < 2; ++c) {
            const double r = Z(c, i) - (d.labels[i] == c ? 1.0 : 0.0);
            s += r * r;
        }
    CHECK(std::abs(loss_from_logits(Z, d, LossKind::L2) - s / 2) < 1e-12);
}

TEST_CASE("gradient matrix") {
    Matrix W(1, 2), Sxx(2, 2), Syx(1, 2), expect(1, 2);
    W << 1, 0;
    Sxx << 2, 0, 0, 1;
    Syx << 1, 1;
    expect << 1, -1;
    CHECK(max_abs(gradient_matrix(W, Sxx, Syx) - expect) == 0.0);

    const Dataset d = random_dataset(4, 3, 40, 8);
    const Moments m = moments(d);
    CHECK(max_abs(gradient_matrix(optimal_solution(d), m.Sxx, m.Syx)) < 1e-8);

    // in principal coordinates G_r = W D - M
    const auto b = eigendecompose(m.Sxx);
    const Matrix Wh = random_matrix(3, 4, 9);
    const Matrix G = gradient_matrix(Wh, m.Sxx, m.Syx) * b.U;
    const Matrix alt = (Wh * b.U) * b.d.asDiagonal() - m.Syx * b.U;
    CHECK(max_abs(G - alt) < 1e-10);
}

TEST_CASE("gradient scale matrices") {
    const auto net = init_network(std::vector<int>{5, 6, 7, 3}, InitScheme::Std, 10);
    const int L = net.depth();
    const Matrix Wh = compact_representation(net);
    const auto s0 = gradient_scale_matrices(net, 0);
    const auto sL = gradient_scale_matrices(net, L);
    CHECK(max_abs(s0.B - Matrix::Identity(5, 5)) == 0.0);
    CHECK(max_abs(sL.A - Matrix::Identity(3, 3)) == 0.0);
    CHECK(max_abs(sL.B - Wh.transpose() * Wh) < 1e-12);
    CHECK(max_abs(s0.A - Wh * Wh.transpose()) < 1e-12);
    for (int l = 0; l <= L; ++l) {
        const auto s = gradient_scale_matrices(net, l);
        CHECK(max_abs(s.B - s.B.transpose()) < 1e-12);
        CHECK(max_abs(s.A - s.A.transpose()) < 1e-12);
    }
}

TEST_CASE("single layer step") {
    DeepLinearNet net{{2, 1}, {(Matrix(1, 2) << 1, 0).finished()}};
    Moments m{(Matrix(2, 2) << 2, 0, 0, 1).finished(), (Matrix(1, 2) << 1, 1).finished()};
    gd_step(net, m, 0.1);
    CHECK(net.layers[0](0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(net.layers[0](0, 1) == doctest::Approx(0.1).epsilon(1e-15));

    auto deep = init_network(std::vector<int>{4, 5, 3}, InitScheme::Std, 11);
    const auto before = deep;
    const Dataset d = random_dataset(4, 3, 10, 12);
    gd_step(deep, moments(d), 0.0);
    for (int l = 0; l < 2; ++l) CHECK(max_abs(deep.layers[l] - before.layers[l]) == 0.0);
    CHECK_THROWS_AS(gd_step(deep, moments(d), -1.0), ValidationError);
}

TEST_CASE("in-place step matches the layer-gradient route") {
    auto net = init_network(std::vector<int>{6, 8, 7, 9, 2}, InitScheme::Std, 13);
    const Dataset d = random_dataset(6, 2, 25, 14);
    const Moments m = moments(d);
    const auto g = l2_layer_gradients(net, m);
    auto ref = net;
    for (int l = 0; l < net.depth(); ++l) ref.layers[l] -= 0.01 * g[l];
    gd_step(net, m, 0.01);
    for (int l = 0; l < net.depth(); ++l) CHECK(max_abs(net.layers[l] - ref.layers[l]) < 1e-13);
}

TEST_CASE("analytic gradients match finite differences") {
    const auto net = init_network(std::vector<int>{8, 16, 12, 3}, InitScheme::Std, 15);
    const Dataset d = random_dataset(8, 3, 30, 16);
    CHECK(gradient_check(net, d, 1e-6, 1000) < 1e-6);

    // explicit central differences on a few entries of the middle layer
    const auto g = l2_layer_gradients(net, moments(d));
    for (int k = 0; k < 5; ++k) {
        auto p = net, q = net;
        const int r = 3 * k % 12, c = 5 * k % 16;
        p.layers[1](r, c) += 1e-6;
        q.layers[1](r, c) -= 1e-6;
        const double fd = (loss(p, d, LossKind::L2) - loss(q, d, LossKind::L2)) / 2e-6;
        CHECK(std::abs(fd - g[1](r, c)) < 1e-6 * std::max(1.0, std::abs(g[1](r, c))));
    }
}

TEST_CASE("cross-entropy gradient matches finite differences") {
    const Dataset d = random_dataset(4, 3, 20, 17);
    const Matrix W = random_matrix(3, 4, 18, 0.5);
    const Matrix G = loss_gradient_wrt_compact(W, d, LossKind::CrossEntropy);
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 4; ++j) {
            Matrix p = W, q = W;
            p(c, j) += 1e-6;
            q(c, j) -= 1e-6;
            const double fd =
                (loss_from_logits(p * d.X, d, LossKind::CrossEntropy) - loss_from_logits(q * d.X, d, LossKind::CrossEntropy)) /
                2e-6;
            CHECK(std::abs(fd - G(c, j)) < 1e-6 * std::max(1.0, std::abs(fd)));
        }
}

TEST_CASE("training traces") {
    const Dataset d = random_dataset(5, 2, 30, 19);
    const std::vector<int> w{5, 16, 16, 2};
    auto net = init_network(w, InitScheme::Std, 20);
    TrainConfig cfg;
    cfg.epochs = 0;
    auto tr = train(net, d, cfg);
    CHECK(tr.snapshots.size() == 1);
    CHECK(tr.snapshots[0].epoch == 0);

    const double d1 = principal_basis(d.X).d(0);
    cfg.epochs = 100;
    cfg.mu = 0.01 / (d1 * 3);
    net = init_network(w, InitScheme::Std, 20);
    tr = train(net, d, cfg);
    REQUIRE(tr.snapshots.size() == 101);
    for (std::size_t k = 1; k < tr.snapshots.size(); ++k)
        CHECK(tr.snapshots[k].loss <= tr.snapshots[k - 1].loss + 1e-9);

    auto net2 = init_network(w, InitScheme::Std, 20);
    const auto tr2 = train(net2, d, cfg);
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        CHECK(tr.snapshots[k].loss == tr2.snapshots[k].loss);
        CHECK(max_abs(tr.snapshots[k].compact - tr2.snapshots[k].compact) == 0.0);
    }
}

TEST_CASE("divergence is reported") {
    const Dataset d = random_dataset(5, 2, 30, 21);
    auto net = init_network(std::vector<int>{5, 8, 2}, InitScheme::Std, 22);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.mu = 10.0;
    const auto tr = train(net, d, cfg);
    CHECK(tr.diverged);
    CHECK(!tr.error.empty());
}

TEST_CASE("least-squares optimum") {
    Dataset d;
    d.X = Matrix::Identity(3, 3);
    d.labels = {0, 1, 0};
    d.K = 2;
    // Sigma_XX = I: the optimum is Sigma_YX
    CHECK(max_abs(optimal_solution(d) - d.class_sums()) < 1e-14);

    // principal coordinates: column j of the optimum is m_j / d_j
    const Dataset e = random_dataset(4, 2, 30, 23);
    const auto b = principal_basis(e.X);
    const Matrix WU = optimal_solution(e) * b.U;
    const Matrix MU = e.class_sums() * b.U;
    for (int j = 0; j < 4; ++j) CHECK(max_abs(WU.col(j) - MU.col(j) / b.d(j)) < 1e-12);
    Dataset f;
    f.X = (Matrix(2, 3) << 2, 0, 0, 0, 1, 1).finished();
    f.labels = {0, 0, 0};
    f.K = 1;
    // d = (4, 2) with class sums (2, 2): optimum (0.5, 1)
    const Matrix Wf = optimal_solution(f);
    CHECK(Wf(0, 0) == doctest::Approx(0.5));
    CHECK(Wf(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("correctness ties go to the lowest class") {
    Matrix Z(3, 3);
    Z << 1, 0, 2, 1, 0, 2, 0, 0, 3;
    const std::vector<int> y{0, 1, 2};
    const auto c = correctness(Z, y);
    CHECK(c[0] == 1);
    CHECK(c[1] == 0);
    CHECK(c[2] == 1);
}
