#pragma once

#include "pcbias/common.hpp"

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <vector>

// Data-parallel hot loops. Every kernel has a serial reference in
// kernels::serial; the OpenMP versions use a fixed work split so their output
// does not depend on the number of threads.
namespace pcbias::kernels {

namespace serial {
Matrix gram(const Matrix& X);
Vector knn_agreement(const Matrix& F, std::span<const int> labels, int k);
Vector example_mean(std::span<const std::uint8_t> bits, std::size_t members, std::size_t epochs,
                    std::size_t examples);
}  // namespace serial

namespace omp {
Matrix gram(const Matrix& X);
Vector knn_agreement(const Matrix& F, std::span<const int> labels, int k);
Vector example_mean(std::span<const std::uint8_t> bits, std::size_t members, std::size_t epochs,
                    std::size_t examples);
}  // namespace omp

// Runs body(i) for i in [0, n) on the worker pool. Exceptions are collected and
// the one thrown by the lowest index is rethrown after the loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Caps the worker count (0 = runtime default).
void set_thread_cap(int threads);
int thread_count();

}  // namespace pcbias::kernels
