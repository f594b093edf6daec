#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcbias {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to turn (master, index) into well-spread generator seeds
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// member i of an ensemble gets master xor i
inline std::uint64_t member_seed(std::uint64_t master, std::uint64_t index) { return master ^ index; }

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

// independent stream for a (seed, stream) pair, e.g. Monte-Carlo trial t
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1)));
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}
inline void require_dims(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

}  // namespace pcbias
