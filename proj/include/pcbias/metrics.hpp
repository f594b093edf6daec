#pragma once

#include "pcbias/common.hpp"
#include "pcbias/dataset.hpp"
#include "pcbias/spectra.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pcbias {

// correctness bits indexed (member, epoch, example), example fastest
struct PredictionTensor {
    std::size_t members = 0, epochs = 0, examples = 0;
    std::vector<std::uint8_t> bits;

    PredictionTensor() = default;
    PredictionTensor(std::size_t m, std::size_t e, std::size_t x) : members(m), epochs(e), examples(x), bits(m * e * x) {}
    std::uint8_t& at(std::size_t m, std::size_t e, std::size_t x) { return bits[(m * epochs + e) * examples + x]; }
    std::uint8_t at(std::size_t m, std::size_t e, std::size_t x) const { return bits[(m * epochs + e) * examples + x]; }
};

Vector accessibility(const PredictionTensor& t);

// Smallest P such that the least-squares classifier fitted once on the
// original training data classifies the example projected to the top P
// principal directions correctly.
class CriticalPcEvaluator {
public:
    // refit: fit a separate classifier on the P-projected training data for every P
    CriticalPcEvaluator(const Dataset& train, const SpectralBasis& basis, bool refit = false);
    std::optional<int> operator()(const Vector& x, int label, int max_P) const;
    std::vector<std::optional<int>> all(const Dataset& eval, int max_P) const;

private:
    SpectralBasis basis_;
    Matrix WU_;                  // fit-once classifier in principal coordinates, K x q
    std::vector<Matrix> per_P_;  // refit classifiers (principal coordinates, K x P)
};

std::optional<int> critical_principal_component(const Dataset& train, const SpectralBasis& basis,
                                                const Vector& x, int label, int max_P);

// smallest j such that the first j sinusoids have the sign of the label
std::optional<int> critical_frequency(const std::vector<double>& kappa, const std::vector<double>& phi, double z,
                                      int label);

// fraction of the k nearest neighbours (columns of F) sharing the label
Vector discriminability(const Matrix& F, std::span<const int> labels, int k);
inline Vector discriminability(const Dataset& d, int k) { return discriminability(d.X, d.labels, k); }

enum class CorrKind { Pearson, Spearman };

struct Correlation {
    double r = 0;
    double p = 1;  // two-sided, t-distribution approximation
};

Correlation correlate(std::span<const double> a, std::span<const double> b, CorrKind kind);
inline Correlation correlate(const Vector& a, const Vector& b, CorrKind kind) {
    return correlate(std::span<const double>(a.data(), a.size()), std::span<const double>(b.data(), b.size()), kind);
}

// average ranks (1-based), ties share their mean rank
std::vector<double> ranks(std::span<const double> v);

}  // namespace pcbias
