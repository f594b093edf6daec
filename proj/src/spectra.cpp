#include "pcbias/spectra.hpp"

#include "pcbias/kernels.hpp"

#include <algorithm>
#include <numeric>

namespace pcbias {

Matrix covariance(const Matrix& X) {
    require_dims(X.rows() > 0 && X.cols() > 0, "covariance: empty data matrix");
    return kernels::omp::gram(X);
}

SpectralBasis eigendecompose(const Matrix& sigma) {
    require_dims(sigma.rows() == sigma.cols() && sigma.rows() > 0, "eigendecompose: need a non-empty square matrix");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            "eigendecompose: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    if (es.info() != Eigen::Success) throw ValidationError("eigendecompose: solver did not converge");

    const Eigen::Index q = sigma.rows();
    std::vector<Eigen::Index> order(q);
    std::iota(order.begin(), order.end(), 0);
    const Vector& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ev(a) > ev(b); });

    SpectralBasis out{Matrix(q, q), Vector(q)};
    for (Eigen::Index j = 0; j < q; ++j) {
        double v = ev(order[j]);
        if (v < 0 && v >= -1e-12 * scale) v = 0;
        out.d(j) = v;
        Vector u = es.eigenvectors().col(order[j]);
        Eigen::Index arg = 0;
        u.cwiseAbs().maxCoeff(&arg);
        if (u(arg) < 0) u = -u;
        out.U.col(j) = u;
    }
    return out;
}

Matrix rotate_to_principal(const Matrix& A, const SpectralBasis& basis, Side side) {
    const Eigen::Index q = basis.dim();
    if (side == Side::Left) {
        require_dims(A.rows() == q, "rotate_to_principal: data rows != basis dimension");
        return basis.U.transpose() * A;
    }
    require_dims(A.cols() == q, "rotate_to_principal: matrix columns != basis dimension");
    return A * basis.U;
}

Matrix rotate_from_principal(const Matrix& A, const SpectralBasis& basis, Side side) {
    const Eigen::Index q = basis.dim();
    if (side == Side::Left) {
        require_dims(A.rows() == q, "rotate_from_principal: data rows != basis dimension");
        return basis.U * A;
    }
    require_dims(A.cols() == q, "rotate_from_principal: matrix columns != basis dimension");
    return A * basis.U.transpose();
}

Matrix zca_matrix(const SpectralBasis& basis, double eps) {
    require(eps > 0, "zca_whiten: eps must be positive");
    Vector s = basis.d.cwiseMax(eps).cwiseSqrt().cwiseInverse();
    return basis.U * s.asDiagonal() * basis.U.transpose();
}

Matrix zca_whiten(const Matrix& X, double eps) {
    require(eps > 0, "zca_whiten: eps must be positive");
    return zca_matrix(principal_basis(X), eps) * X;
}

Matrix project_to_top_pcs(const Matrix& X, const SpectralBasis& basis, int P) {
    require(P >= 1 && P <= basis.dim(), "project_to_top_pcs: P out of range");
    require_dims(X.rows() == basis.dim(), "project_to_top_pcs: data rows != basis dimension");
    const auto Up = basis.U.leftCols(P);
    return Up * (Up.transpose() * X);
}

Matrix amplify_pcs(const Matrix& X, const SpectralBasis& basis, int first, int last, double factor,
                   bool renormalize) {
    require(first >= 1 && first <= last && last <= basis.dim(), "amplify_pcs: empty or out-of-range component range");
    require(factor > 0, "amplify_pcs: factor must be positive");
    require_dims(X.rows() == basis.dim(), "amplify_pcs: data rows != basis dimension");
    Matrix Z = basis.U.transpose() * X;
    Z.middleRows(first - 1, last - first + 1) *= factor;
    Matrix out = basis.U * Z;
    return renormalize ? normalize_channels(out) : out;
}

Matrix normalize_channels(const Matrix& X) {
    Matrix out = X;
    const double n = static_cast<double>(X.cols());
    if (X.cols() == 0) return out;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const double mean = X.row(r).sum() / n;
        out.row(r).array() -= mean;
        const double sd = std::sqrt(out.row(r).squaredNorm() / n);
        if (sd > 0) out.row(r) /= sd;
    }
    return out;
}

}  // namespace pcbias
