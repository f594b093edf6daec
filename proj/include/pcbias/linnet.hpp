#pragma once

#include "pcbias/common.hpp"
#include "pcbias/dataset.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pcbias {

enum class InitScheme { Std, GlorotUniform };
enum class InitDist { Uniform, Gaussian };
enum class LossKind { L2, CrossEntropy };

InitScheme parse_init_scheme(const std::string& s);
LossKind parse_loss_kind(const std::string& s);

// layers[l-1] holds W_l with shape m_l x m_{l-1}
struct DeepLinearNet {
    std::vector<int> widths;  // m_0 = q, ..., m_L = K
    std::vector<Matrix> layers;

    int depth() const { return static_cast<int>(layers.size()); }
};

std::vector<double> layer_variances(std::span<const int> widths, InitScheme scheme);
DeepLinearNet init_network(std::span<const int> widths, InitScheme scheme, std::uint64_t seed,
                           InitDist dist = InitDist::Uniform);

Matrix compact_representation(const DeepLinearNet& net);
Matrix forward(const DeepLinearNet& net, const Matrix& X);

double loss_from_logits(const Matrix& logits, const Dataset& data, LossKind kind);
double loss(const DeepLinearNet& net, const Dataset& data, LossKind kind);

// G_r = W_hat Sigma_XX - Sigma_YX
Matrix gradient_matrix(const Matrix& W_hat, const Matrix& Sxx, const Matrix& Syx);

struct ScaleMatrices {
    Matrix B;  // q x q
    Matrix A;  // K x K
};
ScaleMatrices gradient_scale_matrices(const DeepLinearNet& net, int l);

struct Moments {
    Matrix Sxx;  // X X^T
    Matrix Syx;  // Y X^T
};
Moments moments(const Dataset& data);

// Chain rule from dLoss/dW_hat (K x q) to every layer: S_l^T G P_{l-1}^T.
std::vector<Matrix> layer_gradients(const DeepLinearNet& net, const Matrix& G);
std::vector<Matrix> l2_layer_gradients(const DeepLinearNet& net, const Moments& mom);
// dLoss/dW_hat for either loss on the given examples
Matrix loss_gradient_wrt_compact(const Matrix& W_hat, const Dataset& data, LossKind kind);

// One simultaneous update of all layers from the pre-step weights.
// Throws DivergenceError if any weight becomes non-finite.
void gd_step(DeepLinearNet& net, const Moments& mom, double mu);
void gd_step(DeepLinearNet& net, const Dataset& data, double mu, LossKind kind);

// Least-squares minimizer Sigma_YX pinv(Sigma_XX); eigenvalues below tol*d_1 dropped.
Matrix optimal_solution(const Dataset& data, double tol = 1e-12);

// per-example argmax correctness, ties to the lowest class index
std::vector<std::uint8_t> correctness(const Matrix& logits, std::span<const int> labels);

struct ScaleSnapshot {
    // index l = 0..L
    std::vector<Vector> b_diag, a_diag;
    std::vector<double> b_off, a_off;  // Frobenius norm of the off-diagonal part
};

struct Snapshot {
    int epoch = 0;
    double loss = 0;
    Matrix compact;
    std::optional<ScaleSnapshot> scale;
    Matrix a_sum;  // sum_{l=1..L} A_l, when requested
    std::vector<std::uint8_t> correct;
};

struct TrainTrace {
    std::vector<Snapshot> snapshots;
    bool diverged = false;
    std::string error;
};

struct TrainConfig {
    int epochs = 1;
    double mu = 1e-3;
    LossKind loss = LossKind::L2;
    int batch = 0;  // 0: full batch GD, otherwise minibatch size
    std::uint64_t seed = 0;  // minibatch order
    int cadence = 1;
    bool record_compact = true;
    bool record_scale = false;
    bool record_a_sum = false;
    bool record_correctness = false;
    const Dataset* eval = nullptr;  // correctness set, defaults to the training data
};

TrainTrace train(DeepLinearNet& net, const Dataset& data, const TrainConfig& cfg);

ScaleSnapshot scale_snapshot(const DeepLinearNet& net);
Matrix a_sum(const DeepLinearNet& net);

}  // namespace pcbias
