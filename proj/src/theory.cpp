#include "pcbias/theory.hpp"

#include "pcbias/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcbias {

Thm3Prediction predict_thm3(const Vector& w0, const Vector& wopt, double d, double mu, int L, int t) {
    require(t >= 0, "predict_thm3: t must be non-negative");
    require_dims(w0.size() == wopt.size(), "predict_thm3: w0/wopt size mismatch");
    Thm3Prediction p;
    p.lambda = 1.0 - mu * d * L;
    p.step_too_large = std::abs(p.lambda) > 1.0;
    const double lt = std::pow(p.lambda, t);
    p.w = lt * w0 + (1.0 - lt) * wopt;
    return p;
}

Vector predict_thm4(const Vector& w0, const Vector& wopt, double d, double mu, std::span<const Matrix> A_history) {
    require_dims(w0.size() == wopt.size(), "predict_thm4: w0/wopt size mismatch");
    const Eigen::Index K = w0.size();
    // walk back from the newest step: R = prod_{t''>t'} (I - mu d A_t'')
    Matrix R = Matrix::Identity(K, K);
    Vector acc = Vector::Zero(K);
    for (auto it = A_history.rbegin(); it != A_history.rend(); ++it) {
        require_dims(it->rows() == K && it->cols() == K, "predict_thm4: A history shape mismatch");
        acc += mu * d * (R * (*it * wopt));
        R = R * (Matrix::Identity(K, K) - mu * d * *it);
    }
    return R * w0 + acc;
}

std::pair<double, double> analytic_beta_alpha(std::span<const int> widths, std::span<const double> sigma2, int l) {
    const int L = static_cast<int>(sigma2.size());
    require_dims(static_cast<int>(widths.size()) == L + 1, "analytic_beta_alpha: widths/sigmas length mismatch");
    require(l >= 0 && l <= L, "analytic_beta_alpha: layer index out of range");
    double beta = 1, alpha = 1;
    for (int n = 1; n <= l; ++n) beta *= widths[n] * sigma2[n - 1];
    for (int n = l + 1; n <= L; ++n) alpha *= widths[n - 1] * sigma2[n - 1];
    return {beta, alpha};
}

namespace {

struct EntryAccum {
    Matrix sum, sumsq;
    std::vector<double> diag_means, off_means;
};

ScaleStats reduce(const EntryAccum& acc, int trials, double analytic) {
    ScaleStats s;
    s.analytic = analytic;
    const double T = trials;
    auto mean_se = [&](const std::vector<double>& v, double& mean, double& se) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / T;
        double ss = 0;
        for (double x : v) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / (T - 1)) / std::sqrt(T);
    };
    mean_se(acc.diag_means, s.diag_mean, s.diag_se);
    if (!acc.off_means.empty()) mean_se(acc.off_means, s.off_mean, s.off_se);
    const Matrix var = ((acc.sumsq - acc.sum.cwiseProduct(acc.sum) / T) / (T - 1)).cwiseMax(0.0);
    const Eigen::Index n = var.rows();
    s.var_diag = var.diagonal().mean();
    if (n > 1) s.var_off = (var.sum() - var.diagonal().sum()) / static_cast<double>(n * (n - 1));
    return s;
}

void add(EntryAccum& acc, const Matrix& M) {
    if (acc.sum.size() == 0) {
        acc.sum = Matrix::Zero(M.rows(), M.cols());
        acc.sumsq = Matrix::Zero(M.rows(), M.cols());
    }
    acc.sum += M;
    acc.sumsq += M.cwiseProduct(M);
    const Eigen::Index n = M.rows();
    acc.diag_means.push_back(M.diagonal().mean());
    if (n > 1) acc.off_means.push_back((M.sum() - M.diagonal().sum()) / static_cast<double>(n * (n - 1)));
}

}  // namespace

RandMatReport verify_random_matrix_stats(std::span<const int> widths, InitScheme scheme, int trials,
                                         std::uint64_t seed) {
    require(trials >= 30, "verify_random_matrix_stats: need at least 30 trials");
    const auto s2 = layer_variances(widths, scheme);
    const int L = static_cast<int>(s2.size());

    // per-trial scale matrices, reduced afterwards in trial order
    std::vector<std::vector<ScaleMatrices>> per_trial(trials);
    kernels::parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const DeepLinearNet net = init_network(widths, scheme, mix64(seed) ^ mix64(t + 1));
        for (int l = 0; l <= L; ++l) per_trial[t].push_back(gradient_scale_matrices(net, l));
    });

    RandMatReport rep;
    rep.widths.assign(widths.begin(), widths.end());
    rep.trials = trials;
    for (int l = 0; l <= L; ++l) {
        EntryAccum b, a;
        for (int t = 0; t < trials; ++t) {
            add(b, per_trial[t][l].B);
            add(a, per_trial[t][l].A);
        }
        const auto [beta, alpha] = analytic_beta_alpha(widths, s2, l);
        rep.B.push_back(reduce(b, trials, beta));
        rep.A.push_back(reduce(a, trials, alpha));
    }
    return rep;
}

std::vector<DriftRow> scale_matrix_drift(const TrainTrace& trace, std::span<const int> widths, InitScheme scheme) {
    const auto s2 = layer_variances(widths, scheme);
    const int L = static_cast<int>(s2.size());
    std::vector<DriftRow> rows;
    for (const auto& snap : trace.snapshots) {
        if (!snap.scale) throw ValidationError("scale_matrix_drift: trace has no scale-matrix snapshots");
        const auto& sc = *snap.scale;
        for (int l = 0; l <= L; ++l) {
            const auto [beta, alpha] = analytic_beta_alpha(widths, s2, l);
            DriftRow r;
            r.epoch = snap.epoch;
            r.layer = l;
            r.b_diag = (sc.b_diag[l].array() - beta).matrix().norm();
            r.a_diag = (sc.a_diag[l].array() - alpha).matrix().norm();
            r.b_off = sc.b_off[l];
            r.a_off = sc.a_off[l];
            rows.push_back(r);
        }
    }
    return rows;
}

double gradient_check(const DeepLinearNet& net, const Dataset& data, double h, int max_entries, std::uint64_t seed) {
    require(h > 0, "gradient_check: h must be positive");
    const auto grads = l2_layer_gradients(net, moments(data));
    Rng rng = make_rng(seed);
    DeepLinearNet probe = net;
    double worst = 0;
    for (int l = 0; l < net.depth(); ++l) {
        const Matrix& G = grads[l];
        const double tau = 1e-2 * G.cwiseAbs().maxCoeff();
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(G.size()));
        std::iota(idx.begin(), idx.end(), 0);
        if (static_cast<int>(idx.size()) > max_entries) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(static_cast<std::size_t>(max_entries));
        }
        for (Eigen::Index e : idx) {
            double& w = probe.layers[l].data()[e];
            const double w0 = w;
            w = w0 + h;
            const double up = loss(probe, data, LossKind::L2);
            w = w0 - h;
            const double dn = loss(probe, data, LossKind::L2);
            w = w0;
            const double num = (up - dn) / (2 * h);
            const double ana = G.data()[e];
            const double denom = std::max({std::abs(ana), std::abs(num), tau});
            if (denom > 0) worst = std::max(worst, std::abs(ana - num) / denom);
        }
    }
    return worst;
}

double directional_gradient_check(const DeepLinearNet& net, const Dataset& data, double h, std::uint64_t seed) {
    require(h > 0, "directional_gradient_check: h must be positive");
    const auto grads = l2_layer_gradients(net, moments(data));
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g;
    std::vector<Matrix> dir;
    double analytic = 0;
    for (int l = 0; l < net.depth(); ++l) {
        Matrix V(net.layers[l].rows(), net.layers[l].cols());
        for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = g(rng);
        V /= V.norm();
        analytic += grads[l].cwiseProduct(V).sum();
        dir.push_back(std::move(V));
    }
    auto at = [&](double s) {
        DeepLinearNet p = net;
        for (int l = 0; l < net.depth(); ++l) p.layers[l] += s * dir[l];
        return loss(p, data, LossKind::L2);
    };
    const double num = (at(h) - at(-h)) / (2 * h);
    const double denom = std::max(std::abs(analytic), std::abs(num));
    return denom > 0 ? std::abs(analytic - num) / denom : 0.0;
}

double prop1_residual(const DeepLinearNet& net, const Moments& mom, double mu) {
    const Matrix before = compact_representation(net);
    const Matrix G = gradient_matrix(before, mom.Sxx, mom.Syx);
    Matrix first_order = Matrix::Zero(before.rows(), before.cols());
    for (int l = 1; l <= net.depth(); ++l) {
        const auto A = gradient_scale_matrices(net, l).A;
        const auto B = gradient_scale_matrices(net, l - 1).B;
        first_order += A * G * B;
    }
    DeepLinearNet stepped = net;
    gd_step(stepped, mom, mu);
    return (compact_representation(stepped) - before + mu * first_order).norm();
}

}  // namespace pcbias
