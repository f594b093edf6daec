#pragma once

#include "pcbias/common.hpp"
#include "pcbias/dataset.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pcbias {

struct SpectrumSpec {
    int q = 0;
    int K = 2;
    int n_per_class = 0;
    std::vector<double> profile;                 // per-direction variance, non-increasing, length q
    std::vector<std::pair<int, double>> signal;  // (1-based principal direction, mean magnitude)
    bool random_basis = true;                    // false: directions are the coordinate axes

    void validate() const;
};

// "flat", "powerlaw:a" (j^-a), "geometric:r" (r^-(j-1)), "list:v1,v2,..."
std::vector<double> make_profile(const std::string& text, int q);

// directions 1..count get magnitude scale * profile_j^exponent
std::vector<std::pair<int, double>> signal_law(const std::vector<double>& profile, int count, double scale,
                                               double exponent);

// Class c has mean sum_j mag_j s_cj u_j, s_cj = +1 if c == (j-1) mod K else -1/(K-1),
// and covariance U diag(profile) U^T.
Dataset gaussian_classes(const SpectrumSpec& spec, std::uint64_t seed);

// The orthonormal basis gaussian_classes / symmetric_binary use for a seed.
Matrix generator_basis(const SpectrumSpec& spec, std::uint64_t seed);

// n_per_class pairs (x, -x) with x ~ N(0, U diag(profile) U^T); class 0 iff v.x >= 0,
// v = sum_j mag_j u_j from spec.signal. Total n = 2 * n_per_class.
Dataset symmetric_binary(const SpectrumSpec& spec, std::uint64_t seed);

const std::vector<double>& fixed_phases();
std::vector<double> fixed_frequencies();

// sum_{i < prefix} sin(2 pi kappa_i z + phi_i); prefix < 0 means all terms
double frequency_lambda(const std::vector<double>& kappa, const std::vector<double>& phi, double z, int prefix = -1);

// rows: z in [-1, 1], second coordinate in [-2pi, 2pi]; label 1 iff lambda(z) > 0
Dataset frequency_dataset(const std::vector<double>& kappa, const std::vector<double>& phi, int n, std::uint64_t seed);

Dataset shuffle_labels(const Dataset& data, std::uint64_t seed);

enum class LabelSource { Original, Shuffled };

struct SeparableInfo {
    int flipped = 0;     // labels differing from the starting labels
    int iterations = 0;  // fit/flip rounds until the refit was consistent
};

// Least-squares separator on the top-P principal coordinates; misclassified
// labels are switched, and the fit/flip is repeated until the refit classifier
// agrees with every label.
Dataset make_separable_by_top_pcs(const Dataset& data, int P, LabelSource from, std::uint64_t seed,
                                  SeparableInfo* info = nullptr);

enum class DataFormat { Csv, RawF64 };
DataFormat parse_data_format(const std::string& s);

void save_dataset(const Dataset& data, const std::string& path, DataFormat format);
Dataset load_dataset(const std::string& path, DataFormat format);

}  // namespace pcbias
