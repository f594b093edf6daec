#pragma once

#include "pcbias/common.hpp"
#include "pcbias/linnet.hpp"

#include <span>
#include <utility>
#include <vector>

namespace pcbias {

struct Thm3Prediction {
    Vector w;
    double lambda = 1;
    bool step_too_large = false;  // |lambda| > 1
};

// lambda^t w0 + (1 - lambda^t) wopt with lambda = 1 - mu d L
Thm3Prediction predict_thm3(const Vector& w0, const Vector& wopt, double d, double mu, int L, int t);

// A_history[k] is sum_l A_l at the weights used by step k+1; applied oldest first.
Vector predict_thm4(const Vector& w0, const Vector& wopt, double d, double mu, std::span<const Matrix> A_history);

// (beta_l, alpha_l) for layer variances sigma2[0..L-1]
std::pair<double, double> analytic_beta_alpha(std::span<const int> widths, std::span<const double> sigma2, int l);

struct ScaleStats {
    double diag_mean = 0, diag_se = 0;
    double off_mean = 0, off_se = 0;
    double var_diag = 0, var_off = 0;  // entrywise variance across trials, averaged
    double analytic = 0;               // beta_l for B, alpha_l for A
};

struct RandMatReport {
    std::vector<int> widths;
    int trials = 0;
    std::vector<ScaleStats> B, A;  // index l = 0..L
};

RandMatReport verify_random_matrix_stats(std::span<const int> widths, InitScheme scheme, int trials,
                                         std::uint64_t seed);

struct DriftRow {
    int epoch = 0;
    int layer = 0;
    double b_diag = 0, b_off = 0, a_diag = 0, a_off = 0;
};

std::vector<DriftRow> scale_matrix_drift(const TrainTrace& trace, std::span<const int> widths, InitScheme scheme);

// Worst per-entry relative error between analytic layer gradients and central
// differences of the l2 loss. An entry's error is |a - n| / max(|a|, |n|, tau)
// with tau = 1e-2 * (largest analytic entry of that layer), so near-zero
// entries are judged against the layer's gradient scale. Up to max_entries
// entries per layer are checked (all if the layer is smaller).
double gradient_check(const DeepLinearNet& net, const Dataset& data, double h, int max_entries = 64,
                      std::uint64_t seed = 0);

// Relative error of the directional derivative along a random all-layer
// direction. The loss is a degree-2L polynomial along it, so the central
// difference error shows the h^2 truncation order.
double directional_gradient_check(const DeepLinearNet& net, const Dataset& data, double h, std::uint64_t seed);

// || (W_hat after one GD step - W_hat before) + mu sum_l A_l G B_{l-1} ||_F
double prop1_residual(const DeepLinearNet& net, const Moments& mom, double mu);

}  // namespace pcbias
