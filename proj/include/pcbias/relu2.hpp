#pragma once

#include "pcbias/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcbias {

// f(x) = a^T relu(W x); only W is trained. Rows (2i, 2i+1) start as exact negations.
struct ReLU2Net {
    Matrix W;  // m x d
    Vector a;  // m
};

ReLU2Net init_relu2(int m, int d, std::uint64_t seed, double scale);

double forward_relu2(const ReLU2Net& net, const Vector& x);
Vector forward_relu2(const ReLU2Net& net, const Matrix& X);

// 1/2 sum_i (f(x_i) - y_i)^2
double relu2_loss(const ReLU2Net& net, const Matrix& X, const Vector& y);

// Row r: a_r sum_{i: w_r.x_i >= 0} (f(x_i) - y_i) x_i^T  (inclusive indicator at the kink)
Matrix relu2_gradient(const ReLU2Net& net, const Matrix& X, const Vector& y);

struct Relu2Trace {
    std::vector<int> epochs;
    std::vector<Matrix> W;
    std::vector<double> loss;
    bool diverged = false;
    std::string error;
};

Relu2Trace train_relu2(ReLU2Net& net, const Matrix& X, const Vector& y, double mu, int epochs, int cadence = 1);

// Early-training closed form: row r of the predicted change is
// -mu a_r [ (1/4) a^T W Sigma_XX - m_r ], with m_r = sum of y_i x_i over the
// half-space w_r.x >= 0 (class-sum difference there).
Matrix predicted_update_thm5(const ReLU2Net& net, const Matrix& X, const Vector& y, double mu);

}  // namespace pcbias
