#pragma once

#include "pcbias/common.hpp"
#include "pcbias/dataset.hpp"

#include <random>
#include <vector>

namespace pcbias::test {

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
    Rng rng = make_rng(seed, 991);
    std::normal_distribution<double> g(0.0, scale);
    Matrix M(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) M(i, j) = g(rng);
    return M;
}

inline Matrix random_orthogonal(Eigen::Index n, std::uint64_t seed) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, seed));
    return qr.householderQ() * Matrix::Identity(n, n);
}

inline double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

inline Dataset random_dataset(int q, int K, int n, std::uint64_t seed) {
    Dataset d;
    d.X = random_matrix(q, n, seed);
    d.K = K;
    Rng rng = make_rng(seed, 7);
    for (int i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(rng() % static_cast<unsigned>(K)));
    return d;
}

}  // namespace pcbias::test
