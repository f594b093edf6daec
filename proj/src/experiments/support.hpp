#pragma once

// Shared plumbing for the experiment runners: config sections, data and
// ensemble setup, per-PC statistics.

#include "pcbias/config.hpp"
#include "pcbias/csv.hpp"
#include "pcbias/datagen.hpp"
#include "pcbias/experiments.hpp"
#include "pcbias/linnet.hpp"
#include "pcbias/plot.hpp"
#include "pcbias/spectra.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace pcbias::exp {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DataParams {
    std::string source = "gaussian";  // gaussian | symmetric | file
    int q = 32;
    int classes = 2;
    int n_per_class = 500;
    int test_per_class = 0;
    std::string profile = "powerlaw:1";
    int signal_pcs = -1;  // -1: all q directions
    double signal_scale = 1.0;
    double signal_exponent = 0.5;
    bool random_basis = true;
    bool normalize = false;
    std::string path, test_path, format = "csv";

    void read(const Config& cfg);
};

struct DataBundle {
    Dataset train, test;
};

// generated data uses seed master ^ 0xda7a; test_per_class examples per class are split off the same sample
DataBundle make_data(const DataParams& p, std::uint64_t master);

// ZCA fitted on the training set, applied to both sets. per_example scales the
// result so that XX^T = n I (unit covariance per example) instead of I.
DataBundle whiten(const DataBundle& d, double eps = 1e-12, bool per_example = true);

struct ModelParams {
    int depth = 5;
    int width = 256;
    std::string init = "std";
    std::string dist = "uniform";

    void read(const Config& cfg);
    std::vector<int> widths(int q, int K) const;
    InitScheme scheme() const { return parse_init_scheme(init); }
    InitDist distribution() const;
};

struct TrainParams {
    double lr = kNaN;       // absolute learning rate
    double lr_scale = 0.1;  // otherwise mu = lr_scale / (d_1 L) (times n for cross-entropy)
    int epochs = 100;
    int batch = 0;
    int cadence = 1;
    int ensemble = 10;
    std::string loss = "l2";

    void read(const Config& cfg);
    double mu(const Dataset& train, int depth) const;
    TrainConfig config(const Dataset& train, int depth) const;
};

// Members i in [first, first + count) use seed member_seed(master, i).
// Member `scale_member` (if >= 0, relative index) also records scale matrices.
std::vector<TrainTrace> train_ensemble(const std::vector<int>& widths, const ModelParams& model, const Dataset& train,
                                       const TrainConfig& base, int count, std::uint64_t master, int first = 0,
                                       int scale_member = -1);

// Cross-member statistics of the rotated compact representation W U (columns = PCs).
struct PcStats {
    std::vector<int> epochs;
    Matrix std;   // snapshots x q: sqrt of summed per-class population variance across members
    Matrix dist;  // snapshots x q: mean over members of ||w_j - wopt_j||
};

// rotated[m][s] = K x q rotated compact representation of member m at snapshot s
PcStats pc_stats(const std::vector<std::vector<Matrix>>& rotated, const std::vector<int>& epochs,
                 const Matrix& wopt_rot);

// First time the std of each column falls to half its t=0 value, log-linearly
// interpolated between snapshots; NaN if it never does.
std::vector<double> half_times(const PcStats& s);

struct OrderCheck {
    double spearman = kNaN;
    int censored = 0;  // components that never halved (ranked last, tied)
};

// Spearman between PC index 1..count and half-time
OrderCheck index_order(const std::vector<double>& halftimes, int count);

std::vector<std::vector<Matrix>> rotate_traces(const std::vector<TrainTrace>& traces, const SpectralBasis& basis);

void add_pc_tables(ExperimentResult& res, const std::string& prefix, const PcStats& s,
                   const std::vector<double>& halftimes, const SpectralBasis& basis, bool plots);

std::string bool_cell(bool b);

// first epoch at which series exceeds factor * its initial value; -1 if never
int first_exceed(const std::vector<int>& epochs, const std::vector<double>& v, double factor);

}  // namespace pcbias::exp
