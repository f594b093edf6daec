#include "pcbias/linnet.hpp"

#include "pcbias/kernels.hpp"
#include "pcbias/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcbias {

namespace {

// P[l] = W_l ... W_1 for l = 1..L (P[0] unused, stands for I).
std::vector<Matrix> prefixes(const DeepLinearNet& net) {
    const int L = net.depth();
    std::vector<Matrix> P(L + 1);
    if (L == 0) return P;
    P[1] = net.layers[0];
    for (int l = 2; l <= L; ++l) P[l].noalias() = net.layers[l - 1] * P[l - 1];
    return P;
}

// S[l] = W_L ... W_{l+1} for l = 0..L-1 (S[L] unused, stands for I).
std::vector<Matrix> suffixes(const DeepLinearNet& net) {
    const int L = net.depth();
    std::vector<Matrix> S(L + 1);
    if (L == 0) return S;
    S[L - 1] = net.layers[L - 1];
    for (int l = L - 2; l >= 0; --l) S[l].noalias() = S[l + 1] * net.layers[l];
    return S;
}

void check_finite(const DeepLinearNet& net) {
    for (const auto& W : net.layers)
        if (!W.allFinite()) throw DivergenceError("non-finite weights after gradient step");
}

double offdiag_norm(const Matrix& M) {
    return std::sqrt(std::max(0.0, M.squaredNorm() - M.diagonal().squaredNorm()));
}

}  // namespace

InitScheme parse_init_scheme(const std::string& s) {
    if (s == "std") return InitScheme::Std;
    if (s == "glorot_uniform" || s == "glorot") return InitScheme::GlorotUniform;
    throw ValidationError("unknown init scheme '" + s + "'");
}

LossKind parse_loss_kind(const std::string& s) {
    if (s == "l2") return LossKind::L2;
    if (s == "cross_entropy" || s == "cross_entropy_logits") return LossKind::CrossEntropy;
    throw ValidationError("unknown loss kind '" + s + "'");
}

std::vector<double> layer_variances(std::span<const int> widths, InitScheme scheme) {
    require(widths.size() >= 2, "init_network: need at least two widths");
    for (int m : widths) require(m >= 1, "init_network: widths must be positive");
    const std::size_t L = widths.size() - 1;
    std::vector<double> s2(L);
    for (std::size_t l = 1; l <= L; ++l) {
        const double prev = widths[l - 1], cur = widths[l];
        if (scheme == InitScheme::GlorotUniform) {
            s2[l - 1] = 2.0 / (prev + cur);
        } else if (l == L) {
            s2[l - 1] = 1.0 / prev;  // takes precedence when L = 1
        } else if (l == 1) {
            s2[l - 1] = 1.0 / cur;
        } else {
            s2[l - 1] = 2.0 / (prev + cur);
        }
    }
    return s2;
}

DeepLinearNet init_network(std::span<const int> widths, InitScheme scheme, std::uint64_t seed, InitDist dist) {
    const auto s2 = layer_variances(widths, scheme);
    DeepLinearNet net;
    net.widths.assign(widths.begin(), widths.end());
    Rng rng = make_rng(seed);
    for (std::size_t l = 0; l < s2.size(); ++l) {
        Matrix W(widths[l + 1], widths[l]);
        if (dist == InitDist::Uniform) {
            const double a = std::sqrt(3.0 * s2[l]);
            std::uniform_real_distribution<double> u(-a, a);
            for (Eigen::Index j = 0; j < W.cols(); ++j)
                for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = u(rng);
        } else {
            std::normal_distribution<double> g(0.0, std::sqrt(s2[l]));
            for (Eigen::Index j = 0; j < W.cols(); ++j)
                for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = g(rng);
        }
        net.layers.push_back(std::move(W));
    }
    return net;
}

Matrix compact_representation(const DeepLinearNet& net) {
    require(net.depth() >= 1, "empty network");
    // from the output side: every intermediate has K rows
    Matrix W = net.layers.back();
    for (int l = net.depth() - 2; l >= 0; --l) W = W * net.layers[l];
    return W;
}

Matrix forward(const DeepLinearNet& net, const Matrix& X) {
    require(net.depth() >= 1, "empty network");
    require_dims(X.rows() == net.layers[0].cols(), "forward: input dimension mismatch");
    Matrix H = X;
    for (const auto& W : net.layers) H = W * H;
    return H;
}

double loss_from_logits(const Matrix& logits, const Dataset& data, LossKind kind) {
    require_dims(logits.cols() == data.n() && logits.rows() == data.K, "loss: logits shape mismatch");
    if (kind == LossKind::L2) return 0.5 * (logits - data.one_hot()).squaredNorm();
    if (data.n() == 0) return 0.0;
    double total = 0;
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        const double mx = logits.col(i).maxCoeff();
        const double lse = mx + std::log((logits.col(i).array() - mx).exp().sum());
        total += lse - logits(data.labels[i], i);
    }
    return total / static_cast<double>(data.n());
}

double loss(const DeepLinearNet& net, const Dataset& data, LossKind kind) {
    return loss_from_logits(forward(net, data.X), data, kind);
}

Matrix gradient_matrix(const Matrix& W_hat, const Matrix& Sxx, const Matrix& Syx) {
    require_dims(W_hat.cols() == Sxx.rows() && Sxx.rows() == Sxx.cols() && Syx.rows() == W_hat.rows() &&
                     Syx.cols() == Sxx.cols(),
                 "gradient_matrix: shape mismatch");
    return W_hat * Sxx - Syx;
}

ScaleMatrices gradient_scale_matrices(const DeepLinearNet& net, int l) {
    const int L = net.depth();
    require(l >= 0 && l <= L, "gradient_scale_matrices: layer index out of range");
    const int q = net.widths.front(), K = net.widths.back();
    ScaleMatrices out;
    if (l == 0) {
        out.B = Matrix::Identity(q, q);
    } else {
        Matrix P = net.layers[0];
        for (int j = 1; j < l; ++j) P = net.layers[j] * P;
        out.B = P.transpose() * P;
    }
    if (l == L) {
        out.A = Matrix::Identity(K, K);
    } else {
        Matrix S = net.layers[L - 1];
        for (int j = L - 2; j >= l; --j) S = S * net.layers[j];
        out.A = S * S.transpose();
    }
    return out;
}

Moments moments(const Dataset& data) {
    return Moments{kernels::omp::gram(data.X), data.class_sums()};
}

std::vector<Matrix> layer_gradients(const DeepLinearNet& net, const Matrix& G) {
    const int L = net.depth();
    const auto S = suffixes(net);
    std::vector<Matrix> grads(L);
    // dL/dW_l = S_l^T G P_{l-1}^T; R = G P_{l-1}^T is built up as a K-row chain,
    // so no m x m product beyond the rank-K outer product is formed
    Matrix R = G;
    for (int l = 1; l <= L; ++l) {
        grads[l - 1] = (l == L) ? R : Matrix(S[l].transpose() * R);
        if (l < L) R = R * net.layers[l - 1].transpose();
    }
    return grads;
}

std::vector<Matrix> l2_layer_gradients(const DeepLinearNet& net, const Moments& mom) {
    return layer_gradients(net, gradient_matrix(compact_representation(net), mom.Sxx, mom.Syx));
}

Matrix loss_gradient_wrt_compact(const Matrix& W_hat, const Dataset& data, LossKind kind) {
    if (kind == LossKind::L2) return (W_hat * data.X - data.one_hot()) * data.X.transpose();
    Matrix Z = W_hat * data.X;
    for (Eigen::Index i = 0; i < Z.cols(); ++i) {
        const double mx = Z.col(i).maxCoeff();
        Z.col(i) = (Z.col(i).array() - mx).exp().matrix();
        Z.col(i) /= Z.col(i).sum();
        Z(data.labels[i], i) -= 1.0;
    }
    const double n = std::max<Eigen::Index>(data.n(), 1);
    return Z * data.X.transpose() / n;
}

void gd_step(DeepLinearNet& net, const Moments& mom, double mu) {
    require(mu >= 0, "gd_step: learning rate must be non-negative");
    const int L = net.depth();
    const auto S = suffixes(net);
    // same chain as layer_gradients, applied in place
    Matrix R = gradient_matrix(compact_representation(net), mom.Sxx, mom.Syx);
    Matrix next;
    for (int l = 1; l <= L; ++l) {
        if (l < L) next.noalias() = R * net.layers[l - 1].transpose();
        if (l == L)
            net.layers[l - 1].noalias() -= mu * R;
        else
            net.layers[l - 1].noalias() -= (mu * S[l].transpose()) * R;
        if (l < L) R.swap(next);
    }
    check_finite(net);
}

void gd_step(DeepLinearNet& net, const Dataset& data, double mu, LossKind kind) {
    require(mu >= 0, "gd_step: learning rate must be non-negative");
    if (kind == LossKind::L2) return gd_step(net, moments(data), mu);
    const auto grads = layer_gradients(net, loss_gradient_wrt_compact(compact_representation(net), data, kind));
    for (int l = 0; l < net.depth(); ++l) net.layers[l] -= mu * grads[l];
    check_finite(net);
}

Matrix optimal_solution(const Dataset& data, double tol) {
    const Moments mom = moments(data);
    const SpectralBasis b = eigendecompose(mom.Sxx);
    Vector inv = Vector::Zero(b.dim());
    const double cut = tol * (b.dim() > 0 ? b.d(0) : 0.0);
    for (Eigen::Index j = 0; j < b.dim(); ++j)
        if (b.d(j) > cut && b.d(j) > 0) inv(j) = 1.0 / b.d(j);
    return mom.Syx * b.U * inv.asDiagonal() * b.U.transpose();
}

std::vector<std::uint8_t> correctness(const Matrix& logits, std::span<const int> labels) {
    require_dims(static_cast<std::size_t>(logits.cols()) == labels.size(), "correctness: label count mismatch");
    std::vector<std::uint8_t> out(labels.size());
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < logits.rows(); ++k)
            if (logits(k, i) > logits(arg, i)) arg = k;
        out[i] = arg == labels[i];
    }
    return out;
}

ScaleSnapshot scale_snapshot(const DeepLinearNet& net) {
    const int L = net.depth();
    const int q = net.widths.front(), K = net.widths.back();
    const auto P = prefixes(net);
    const auto S = suffixes(net);
    ScaleSnapshot s;
    for (int l = 0; l <= L; ++l) {
        const Matrix B = l == 0 ? Matrix::Identity(q, q) : Matrix(P[l].transpose() * P[l]);
        const Matrix A = l == L ? Matrix::Identity(K, K) : Matrix(S[l] * S[l].transpose());
        s.b_diag.push_back(B.diagonal());
        s.a_diag.push_back(A.diagonal());
        s.b_off.push_back(offdiag_norm(B));
        s.a_off.push_back(offdiag_norm(A));
    }
    return s;
}

Matrix a_sum(const DeepLinearNet& net) {
    const int L = net.depth();
    const int K = net.widths.back();
    const auto S = suffixes(net);
    Matrix A = Matrix::Identity(K, K);  // A_L
    for (int l = 1; l < L; ++l) A.noalias() += S[l] * S[l].transpose();
    return A;
}

TrainTrace train(DeepLinearNet& net, const Dataset& data, const TrainConfig& cfg) {
    require(cfg.epochs >= 0, "train: epochs must be non-negative");
    require(cfg.cadence >= 1, "train: snapshot cadence must be >= 1");
    require(cfg.mu >= 0, "train: learning rate must be non-negative");
    require_dims(data.q() == net.widths.front() && data.K == net.widths.back(), "train: data does not match network");
    const Dataset& eval = cfg.eval ? *cfg.eval : data;

    TrainTrace trace;
    auto record = [&](int epoch) {
        Snapshot s;
        s.epoch = epoch;
        const Matrix W = compact_representation(net);
        s.loss = loss_from_logits(W * data.X, data, cfg.loss);
        if (cfg.record_compact) s.compact = W;
        if (cfg.record_scale) s.scale = scale_snapshot(net);
        if (cfg.record_a_sum) s.a_sum = a_sum(net);
        if (cfg.record_correctness) s.correct = correctness(W * eval.X, eval.labels);
        const bool bad = !std::isfinite(s.loss) || s.loss > 1e12;
        trace.snapshots.push_back(std::move(s));
        if (bad) {
            trace.diverged = true;
            trace.error = "loss diverged at epoch " + std::to_string(epoch);
        }
        return !bad;
    };
    if (!record(0)) return trace;

    const bool full = cfg.batch <= 0 || cfg.batch >= data.n();
    const Moments full_mom = (full && cfg.loss == LossKind::L2) ? moments(data) : Moments{};
    Rng rng = make_rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.n()));
    std::iota(order.begin(), order.end(), 0);

    try {
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            if (full) {
                if (cfg.loss == LossKind::L2)
                    gd_step(net, full_mom, cfg.mu);
                else
                    gd_step(net, data, cfg.mu, cfg.loss);
            } else {
                std::shuffle(order.begin(), order.end(), rng);
                for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch) {
                    const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch));
                    const Dataset b = subset(data, {order.begin() + lo, order.begin() + hi});
                    gd_step(net, b, cfg.mu, cfg.loss);
                }
            }
            if ((epoch % cfg.cadence == 0 || epoch == cfg.epochs) && !record(epoch)) return trace;
        }
    } catch (const DivergenceError& e) {
        trace.diverged = true;
        trace.error = e.what();
    }
    return trace;
}

}  // namespace pcbias
