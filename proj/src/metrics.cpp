#include "pcbias/metrics.hpp"

#include "pcbias/datagen.hpp"
#include "pcbias/kernels.hpp"
#include "pcbias/linnet.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcbias {

Vector accessibility(const PredictionTensor& t) {
    return kernels::omp::example_mean(t.bits, t.members, t.epochs, t.examples);
}

CriticalPcEvaluator::CriticalPcEvaluator(const Dataset& train, const SpectralBasis& basis, bool refit)
    : basis_(basis) {
    require_dims(train.q() == basis.dim(), "critical PC: basis dimension != data dimension");
    if (!refit) {
        WU_ = optimal_solution(train) * basis.U;
        return;
    }
    const Matrix Z = basis.U.transpose() * train.X;
    for (int P = 1; P <= basis.dim(); ++P)
        per_P_.push_back(optimal_solution(Dataset{Z.topRows(P), train.labels, train.K}));
}

std::optional<int> CriticalPcEvaluator::operator()(const Vector& x, int label, int max_P) const {
    require(max_P >= 1 && max_P <= basis_.dim(), "critical PC: max_P out of range");
    const Vector z = basis_.U.transpose() * x;
    auto correct = [&](const Vector& logits) {
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < logits.size(); ++k)
            if (logits(k) > logits(arg)) arg = k;
        return arg == label;
    };
    if (!per_P_.empty()) {
        for (int P = 1; P <= max_P; ++P)
            if (correct(per_P_[P - 1] * z.head(P))) return P;
        return std::nullopt;
    }
    // logits of the projected example accumulate one principal coordinate at a time
    Vector logits = Vector::Zero(WU_.rows());
    for (int P = 1; P <= max_P; ++P) {
        logits += WU_.col(P - 1) * z(P - 1);
        if (correct(logits)) return P;
    }
    return std::nullopt;
}

std::vector<std::optional<int>> CriticalPcEvaluator::all(const Dataset& eval, int max_P) const {
    std::vector<std::optional<int>> out(static_cast<std::size_t>(eval.n()));
    for (Eigen::Index i = 0; i < eval.n(); ++i) out[i] = (*this)(eval.X.col(i), eval.labels[i], max_P);
    return out;
}

std::optional<int> critical_principal_component(const Dataset& train, const SpectralBasis& basis,
                                                const Vector& x, int label, int max_P) {
    return CriticalPcEvaluator(train, basis)(x, label, max_P);
}

std::optional<int> critical_frequency(const std::vector<double>& kappa, const std::vector<double>& phi, double z,
                                      int label) {
    require(!kappa.empty(), "critical_frequency: empty frequency list");
    const double want = label == 1 ? 1.0 : -1.0;
    for (int j = 1; j <= static_cast<int>(kappa.size()); ++j)
        if (frequency_lambda(kappa, phi, z, j) * want > 0) return j;
    return std::nullopt;
}

Vector discriminability(const Matrix& F, std::span<const int> labels, int k) {
    return kernels::omp::knn_agreement(F, labels, k);
}

std::vector<double> ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (i + j) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
        i = j + 1;
    }
    return r;
}

Correlation correlate(std::span<const double> a, std::span<const double> b, CorrKind kind) {
    require_dims(a.size() == b.size(), "correlate: length mismatch");
    require(a.size() >= 3, "correlate: need at least 3 points");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    if (kind == CorrKind::Spearman) {
        x = ranks(a);
        y = ranks(b);
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) throw ValidationError("correlate: zero-variance input, r undefined");
    Correlation c;
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(c.r) >= 1.0) {
        c.p = 0;
        return c;
    }
    const double df = n - 2;
    const double t = c.r * std::sqrt(df / (1 - c.r * c.r));
    boost::math::students_t dist(df);
    c.p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return c;
}

}  // namespace pcbias
