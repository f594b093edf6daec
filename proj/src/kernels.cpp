#include "pcbias/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <utility>

namespace pcbias::kernels {

namespace {

// number of column blocks used by the parallel gram; fixed so the summation
// order is the same for any thread count
constexpr std::size_t kGramBlocks = 32;

double agreement_one(const Matrix& F, std::span<const int> labels, int k, Eigen::Index i,
                     std::vector<std::pair<double, Eigen::Index>>& buf) {
    const Eigen::Index n = F.cols();
    buf.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        buf.emplace_back((F.col(j) - F.col(i)).squaredNorm(), j);
    }
    // lexicographic on (distance, index): ties go to the lower index
    std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end());
    std::sort(buf.begin(), buf.begin() + k);
    int same = 0;
    for (int r = 0; r < k; ++r) same += labels[buf[r].second] == labels[i];
    return static_cast<double>(same) / k;
}

void check_knn(const Matrix& F, std::span<const int> labels, int k) {
    require_dims(static_cast<std::size_t>(F.cols()) == labels.size(), "discriminability: label count != example count");
    require(k > 0 && k < F.cols(), "discriminability: need 0 < k < n");
}

void check_bits(std::span<const std::uint8_t> bits, std::size_t members, std::size_t epochs,
                std::size_t examples) {
    require(members > 0 && epochs > 0 && examples > 0, "accessibility: empty prediction tensor");
    require_dims(bits.size() == members * epochs * examples, "accessibility: tensor size mismatch");
}

}  // namespace

namespace serial {

Matrix gram(const Matrix& X) {
    const Eigen::Index q = X.rows(), n = X.cols();
    Matrix S = Matrix::Zero(q, q);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index b = 0; b < q; ++b) {
            const double xb = X(b, i);
            for (Eigen::Index a = 0; a < q; ++a) S(a, b) += X(a, i) * xb;
        }
    return S;
}

Vector knn_agreement(const Matrix& F, std::span<const int> labels, int k) {
    check_knn(F, labels, k);
    Vector out(F.cols());
    std::vector<std::pair<double, Eigen::Index>> buf;
    for (Eigen::Index i = 0; i < F.cols(); ++i) out(i) = agreement_one(F, labels, k, i, buf);
    return out;
}

Vector example_mean(std::span<const std::uint8_t> bits, std::size_t members, std::size_t epochs,
                    std::size_t examples) {
    check_bits(bits, members, epochs, examples);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(examples));
    for (std::size_t m = 0; m < members; ++m)
        for (std::size_t e = 0; e < epochs; ++e)
            for (std::size_t x = 0; x < examples; ++x) out(x) += bits[(m * epochs + e) * examples + x];
    return out / static_cast<double>(members * epochs);
}

}  // namespace serial

namespace omp {

Matrix gram(const Matrix& X) {
    const Eigen::Index q = X.rows(), n = X.cols();
    const std::size_t blocks = std::min<std::size_t>(kGramBlocks, std::max<Eigen::Index>(n, 1));
    std::vector<Matrix> part(blocks, Matrix::Zero(q, q));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        const Eigen::Index lo = n * b / static_cast<Eigen::Index>(blocks);
        const Eigen::Index hi = n * (b + 1) / static_cast<Eigen::Index>(blocks);
        if (hi > lo) part[b].noalias() = X.middleCols(lo, hi - lo) * X.middleCols(lo, hi - lo).transpose();
    }
    Matrix S = Matrix::Zero(q, q);
    for (const auto& p : part) S += p;
    // exact symmetry regardless of the blocked product's rounding
    return (S + S.transpose()) * 0.5;
}

Vector knn_agreement(const Matrix& F, std::span<const int> labels, int k) {
    check_knn(F, labels, k);
    const Eigen::Index n = F.cols();
    Vector out(n);
#pragma omp parallel
    {
        std::vector<std::pair<double, Eigen::Index>> buf;
        buf.reserve(static_cast<std::size_t>(n));
#pragma omp for schedule(dynamic, 64)
        for (Eigen::Index i = 0; i < n; ++i) out(i) = agreement_one(F, labels, k, i, buf);
    }
    return out;
}

Vector example_mean(std::span<const std::uint8_t> bits, std::size_t members, std::size_t epochs,
                    std::size_t examples) {
    check_bits(bits, members, epochs, examples);
    Vector out(static_cast<Eigen::Index>(examples));
    const std::size_t stride = examples;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(examples); ++x) {
        std::size_t s = 0;
        for (std::size_t r = 0; r < members * epochs; ++r) s += bits[r * stride + x];
        out(x) = static_cast<double>(s) / static_cast<double>(members * epochs);
    }
    return out;
}

}  // namespace omp

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void set_thread_cap(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace pcbias::kernels
