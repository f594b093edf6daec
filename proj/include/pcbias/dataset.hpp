#pragma once

#include "pcbias/common.hpp"

#include <vector>

namespace pcbias {

// Columns of X are examples; labels are class indices in [0, K).
struct Dataset {
    Matrix X;
    std::vector<int> labels;
    int K = 0;

    Eigen::Index q() const { return X.rows(); }
    Eigen::Index n() const { return X.cols(); }

    Matrix one_hot() const;                 // Y, K x n
    Matrix class_sums() const;              // M = Sigma_YX = Y X^T, K x q
    std::vector<int> class_counts() const;  // n per class
    Vector signed_labels() const;           // +1 for class 0, -1 for class 1 (binary only)

    void validate() const;
};

Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& columns);
Dataset with_features(const Dataset& d, Matrix X);

}  // namespace pcbias
