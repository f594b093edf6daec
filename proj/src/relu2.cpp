#include "pcbias/relu2.hpp"

#include "pcbias/kernels.hpp"

#include <cmath>

namespace pcbias {

ReLU2Net init_relu2(int m, int d, std::uint64_t seed, double scale) {
    require(m > 0 && m % 2 == 0, "init_relu2: m must be a positive even number");
    require(d > 0, "init_relu2: d must be positive");
    require(scale > 0, "init_relu2: scale must be positive");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    std::bernoulli_distribution coin(0.5);
    ReLU2Net net{Matrix(m, d), Vector(m)};
    for (int i = 0; i < m; i += 2) {
        for (int j = 0; j < d; ++j) net.W(i, j) = g(rng);
        net.W.row(i + 1) = -net.W.row(i);
        net.a(i) = coin(rng) ? scale : -scale;
        net.a(i + 1) = -net.a(i);
    }
    return net;
}

double forward_relu2(const ReLU2Net& net, const Vector& x) {
    require_dims(x.size() == net.W.cols(), "forward_relu2: input dimension mismatch");
    return net.a.dot((net.W * x).cwiseMax(0.0));
}

Vector forward_relu2(const ReLU2Net& net, const Matrix& X) {
    require_dims(X.rows() == net.W.cols(), "forward_relu2: input dimension mismatch");
    return ((net.W * X).cwiseMax(0.0)).transpose() * net.a;
}

double relu2_loss(const ReLU2Net& net, const Matrix& X, const Vector& y) {
    return 0.5 * (forward_relu2(net, X) - y).squaredNorm();
}

Matrix relu2_gradient(const ReLU2Net& net, const Matrix& X, const Vector& y) {
    require_dims(y.size() == X.cols(), "relu2_gradient: label count mismatch");
    const Matrix H = net.W * X;  // m x n
    const Vector resid = (H.cwiseMax(0.0)).transpose() * net.a - y;
    // mask(r, i) = 1 iff w_r.x_i >= 0
    const Matrix mask = (H.array() >= 0.0).cast<double>().matrix();
    Matrix E = mask * resid.asDiagonal();  // m x n
    return net.a.asDiagonal() * (E * X.transpose());
}

Relu2Trace train_relu2(ReLU2Net& net, const Matrix& X, const Vector& y, double mu, int epochs, int cadence) {
    require(mu >= 0, "train_relu2: learning rate must be non-negative");
    require(epochs >= 0 && cadence >= 1, "train_relu2: bad epochs/cadence");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        require(y(i) == 1.0 || y(i) == -1.0, "train_relu2: labels must be +1/-1");
    Relu2Trace tr;
    auto record = [&](int e) {
        tr.epochs.push_back(e);
        tr.W.push_back(net.W);
        tr.loss.push_back(relu2_loss(net, X, y));
    };
    record(0);
    for (int e = 1; e <= epochs; ++e) {
        net.W -= mu * relu2_gradient(net, X, y);
        if (!net.W.allFinite()) {
            tr.diverged = true;
            tr.error = "non-finite weights at epoch " + std::to_string(e);
            return tr;
        }
        if (e % cadence == 0 || e == epochs) {
            record(e);
            if (!std::isfinite(tr.loss.back()) || tr.loss.back() > 1e12) {
                tr.diverged = true;
                tr.error = "loss diverged at epoch " + std::to_string(e);
                return tr;
            }
        }
    }
    return tr;
}

Matrix predicted_update_thm5(const ReLU2Net& net, const Matrix& X, const Vector& y, double mu) {
    require_dims(y.size() == X.cols() && X.rows() == net.W.cols(), "predicted_update_thm5: shape mismatch");
    const Matrix Sxx = kernels::omp::gram(X);
    const Eigen::RowVectorXd lin = 0.25 * (net.a.transpose() * net.W) * Sxx;  // 1/4 a^T W Sigma_XX
    const Matrix mask = ((net.W * X).array() >= 0.0).cast<double>().matrix();
    const Matrix Mt = mask * y.asDiagonal() * X.transpose();  // row r: half-space class-sum difference
    Matrix out(net.W.rows(), net.W.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = -mu * net.a(r) * (lin - Mt.row(r));
    return out;
}

}  // namespace pcbias
