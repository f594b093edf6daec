#include "pcbias/dataset.hpp"

#include <string>

namespace pcbias {

void Dataset::validate() const {
    require_dims(labels.size() == static_cast<std::size_t>(X.cols()), "dataset: label count != example count");
    for (int y : labels)
        require(y >= 0 && y < K, "dataset: label " + std::to_string(y) + " outside [0, K)");
}

Matrix Dataset::one_hot() const {
    Matrix Y = Matrix::Zero(K, n());
    for (Eigen::Index i = 0; i < n(); ++i) Y(labels[i], i) = 1.0;
    return Y;
}

Matrix Dataset::class_sums() const {
    Matrix M = Matrix::Zero(K, q());
    for (Eigen::Index i = 0; i < n(); ++i) M.row(labels[i]) += X.col(i).transpose();
    return M;
}

std::vector<int> Dataset::class_counts() const {
    std::vector<int> c(K, 0);
    for (int y : labels) ++c[y];
    return c;
}

Vector Dataset::signed_labels() const {
    require(K == 2, "signed labels need a binary dataset");
    Vector y(n());
    for (Eigen::Index i = 0; i < n(); ++i) y(i) = labels[i] == 0 ? 1.0 : -1.0;
    return y;
}

Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& columns) {
    Dataset out;
    out.K = d.K;
    out.X.resize(d.q(), static_cast<Eigen::Index>(columns.size()));
    out.labels.reserve(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out.X.col(static_cast<Eigen::Index>(c)) = d.X.col(columns[c]);
        out.labels.push_back(d.labels[columns[c]]);
    }
    return out;
}

Dataset with_features(const Dataset& d, Matrix X) {
    require_dims(X.cols() == d.n(), "with_features: example count changed");
    return Dataset{std::move(X), d.labels, d.K};
}

}  // namespace pcbias
