#pragma once

#include "pcbias/common.hpp"

namespace pcbias {

struct SpectralBasis {
    Matrix U;  // columns are principal directions
    Vector d;  // non-increasing eigenvalues of Sigma_XX

    Eigen::Index dim() const { return d.size(); }
};

enum class Side { Left, Right };

// Sigma_XX = X X^T (no 1/n)
Matrix covariance(const Matrix& X);

SpectralBasis eigendecompose(const Matrix& sigma);

inline SpectralBasis principal_basis(const Matrix& X) { return eigendecompose(covariance(X)); }

// Left: U^T A (data, q rows). Right: A U (compact representation, q columns).
Matrix rotate_to_principal(const Matrix& A, const SpectralBasis& basis, Side side);
Matrix rotate_from_principal(const Matrix& A, const SpectralBasis& basis, Side side);

// U diag(1/sqrt(max(d, eps))) U^T, the transform applied by zca_whiten
Matrix zca_matrix(const SpectralBasis& basis, double eps = 1e-12);
Matrix zca_whiten(const Matrix& X, double eps = 1e-12);

Matrix project_to_top_pcs(const Matrix& X, const SpectralBasis& basis, int P);

// 1-based inclusive component range [first, last]
Matrix amplify_pcs(const Matrix& X, const SpectralBasis& basis, int first, int last, double factor,
                   bool renormalize);

// per-feature (row) shift/scale to mean 0, std 1; constant rows are only centered
Matrix normalize_channels(const Matrix& X);

}  // namespace pcbias
