#include "support.hpp"

#include "pcbias/kernels.hpp"
#include "pcbias/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace pcbias {

void ExperimentResult::put(const std::string& name, double value) {
    for (auto& kv : summary)
        if (kv.first == name) {
            kv.second = value;
            return;
        }
    summary.emplace_back(name, value);
}

bool ExperimentResult::has(const std::string& name) const {
    return std::any_of(summary.begin(), summary.end(), [&](const auto& kv) { return kv.first == name; });
}

double ExperimentResult::at(const std::string& name) const {
    for (const auto& kv : summary)
        if (kv.first == name) return kv.second;
    throw std::out_of_range("summary has no metric '" + name + "'");
}

std::string ExperimentResult::summary_csv() const {
    CsvWriter w({"metric", "value"});
    w.row({"kind", kind});
    for (const auto& [k, v] : summary) w.row({k, cell(v)});
    if (diverged) w.row({"error", error});
    return w.str();
}

void ExperimentResult::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : files) {
        std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + name + " in " + dir);
        f << body;
    }
    for (const auto& [name, data] : datasets)
        save_dataset(data, (std::filesystem::path(dir) / name).string(), DataFormat::RawF64);
    std::ofstream f(std::filesystem::path(dir) / "summary.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write summary.csv in " + dir);
    f << summary_csv();
}

}  // namespace pcbias

namespace pcbias::exp {

void DataParams::read(const Config& cfg) {
    source = cfg.get_string("data", "source", source);
    q = static_cast<int>(cfg.get_int("data", "q", q));
    classes = static_cast<int>(cfg.get_int("data", "classes", classes));
    n_per_class = static_cast<int>(cfg.get_int("data", "n_per_class", n_per_class));
    test_per_class = static_cast<int>(cfg.get_int("data", "test_per_class", test_per_class));
    profile = cfg.get_string("data", "profile", profile);
    signal_pcs = static_cast<int>(cfg.get_int("data", "signal_pcs", signal_pcs));
    signal_scale = cfg.get_double("data", "signal_scale", signal_scale);
    signal_exponent = cfg.get_double("data", "signal_exponent", signal_exponent);
    random_basis = cfg.get_bool("data", "random_basis", random_basis);
    normalize = cfg.get_bool("data", "normalize", normalize);
    path = cfg.get_string("data", "path", path);
    test_path = cfg.get_string("data", "test_path", test_path);
    format = cfg.get_string("data", "format", format);
    require(source == "gaussian" || source == "symmetric" || source == "file",
            "data.source must be gaussian, symmetric or file");
    if (source == "file") require(!path.empty(), "data.path is required when data.source is file");
}

DataBundle make_data(const DataParams& p, std::uint64_t master) {
    DataBundle b;
    if (p.source == "file") {
        const DataFormat fmt = parse_data_format(p.format);
        b.train = load_dataset(p.path, fmt);
        if (!p.test_path.empty()) b.test = load_dataset(p.test_path, fmt);
    } else {
        SpectrumSpec spec;
        spec.q = p.q;
        spec.K = p.classes;
        spec.n_per_class = p.n_per_class;
        spec.profile = make_profile(p.profile, p.q);
        spec.signal = signal_law(spec.profile, p.signal_pcs < 0 ? p.q : p.signal_pcs, p.signal_scale,
                                 p.signal_exponent);
        spec.random_basis = p.random_basis;
        // generator_basis depends on the seed, so the test split is drawn with
        // the training sample (same seed) and split off
        const int per = p.n_per_class + p.test_per_class;
        SpectrumSpec s = spec;
        s.n_per_class = per;
        const std::uint64_t seed = master ^ 0xda7a;
        Dataset all = p.source == "gaussian" ? gaussian_classes(s, seed) : symmetric_binary(s, seed);
        if (p.test_per_class == 0) {
            b.train = std::move(all);
        } else {
            std::vector<Eigen::Index> tr, te;
            if (p.source == "gaussian") {
                for (int c = 0; c < p.classes; ++c)
                    for (int i = 0; i < per; ++i)
                        (i < p.n_per_class ? tr : te).push_back(static_cast<Eigen::Index>(c) * per + i);
            } else {
                for (int i = 0; i < per; ++i) {
                    auto& dst = i < p.n_per_class ? tr : te;
                    dst.push_back(2 * i);
                    dst.push_back(2 * i + 1);
                }
            }
            b.train = subset(all, tr);
            b.test = subset(all, te);
        }
    }
    b.train.validate();
    if (p.normalize) {
        // statistics from the training set
        const Vector mean = b.train.X.rowwise().mean();
        Vector sd = ((b.train.X.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
        for (Eigen::Index r = 0; r < sd.size(); ++r)
            if (sd(r) == 0) sd(r) = 1;
        auto apply = [&](Dataset& d) {
            if (d.n() == 0) return;
            d.X = ((d.X.colwise() - mean).array().colwise() / sd.array()).matrix();
        };
        apply(b.train);
        apply(b.test);
    }
    return b;
}

DataBundle whiten(const DataBundle& d, double eps, bool per_example) {
    Matrix Z = zca_matrix(principal_basis(d.train.X), eps);
    // XX^T = I makes every example tiny and the optimum huge; XX^T = n I
    // keeps the optimum on the original data's scale
    if (per_example) Z *= std::sqrt(static_cast<double>(d.train.n()));
    DataBundle out;
    out.train = with_features(d.train, Z * d.train.X);
    if (d.test.n() > 0 || d.test.q() > 0) out.test = with_features(d.test, Z * d.test.X);
    return out;
}

void ModelParams::read(const Config& cfg) {
    depth = static_cast<int>(cfg.get_int("model", "depth", depth));
    width = static_cast<int>(cfg.get_int("model", "width", width));
    init = cfg.get_string("model", "init", init);
    dist = cfg.get_string("model", "dist", dist);
    require(depth >= 1, "model.depth must be >= 1");
    require(width >= 1, "model.width must be >= 1");
    (void)scheme();
    (void)distribution();
}

std::vector<int> ModelParams::widths(int q, int K) const {
    std::vector<int> w{q};
    for (int l = 1; l < depth; ++l) w.push_back(width);
    w.push_back(K);
    return w;
}

InitDist ModelParams::distribution() const {
    if (dist == "uniform") return InitDist::Uniform;
    if (dist == "gaussian") return InitDist::Gaussian;
    throw ValidationError("model.dist must be uniform or gaussian");
}

void TrainParams::read(const Config& cfg) {
    lr = cfg.get_double("train", "lr", lr);
    lr_scale = cfg.get_double("train", "lr_scale", lr_scale);
    epochs = static_cast<int>(cfg.get_int("train", "epochs", epochs));
    batch = static_cast<int>(cfg.get_int("train", "batch", batch));
    cadence = static_cast<int>(cfg.get_int("train", "cadence", cadence));
    ensemble = static_cast<int>(cfg.get_int("train", "ensemble", ensemble));
    loss = cfg.get_string("train", "loss", loss);
    require(std::isnan(lr) || lr > 0, "train.lr must be positive");
    require(lr_scale > 0, "train.lr_scale must be positive");
    require(epochs >= 0, "train.epochs must be non-negative");
    require(cadence >= 1, "train.cadence must be >= 1");
    require(ensemble >= 1, "train.ensemble must be >= 1");
    require(batch >= 0, "train.batch must be non-negative");
    (void)parse_loss_kind(loss);
}

double TrainParams::mu(const Dataset& train, int depth) const {
    if (!std::isnan(lr)) return lr;
    const double d1 = principal_basis(train.X).d(0);
    require(d1 > 0, "training data has zero covariance");
    double m = lr_scale / (d1 * depth);
    if (parse_loss_kind(loss) == LossKind::CrossEntropy) m *= static_cast<double>(train.n());
    if (batch > 0 && batch < train.n()) m *= static_cast<double>(train.n()) / batch;
    return m;
}

TrainConfig TrainParams::config(const Dataset& train, int depth) const {
    TrainConfig c;
    c.epochs = epochs;
    c.mu = mu(train, depth);
    c.loss = parse_loss_kind(loss);
    c.batch = batch;
    c.cadence = cadence;
    return c;
}

std::vector<TrainTrace> train_ensemble(const std::vector<int>& widths, const ModelParams& model, const Dataset& train,
                                       const TrainConfig& base, int count, std::uint64_t master, int first,
                                       int scale_member) {
    std::vector<TrainTrace> traces(static_cast<std::size_t>(count));
    kernels::parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        const std::uint64_t s = member_seed(master, static_cast<std::uint64_t>(first) + i);
        DeepLinearNet net = init_network(widths, model.scheme(), s, model.distribution());
        TrainConfig c = base;
        c.seed = s ^ 0xb47c;
        c.record_scale = base.record_scale || static_cast<int>(i) == scale_member;
        traces[i] = pcbias::train(net, train, c);
    });
    return traces;
}

PcStats pc_stats(const std::vector<std::vector<Matrix>>& rotated, const std::vector<int>& epochs,
                 const Matrix& wopt_rot) {
    const std::size_t M = rotated.size();
    require(M >= 1, "pc_stats: empty ensemble");
    const std::size_t T = rotated[0].size();
    for (const auto& r : rotated) require_dims(r.size() == T, "pc_stats: members have different snapshot counts");
    const Eigen::Index q = wopt_rot.cols();
    PcStats s;
    s.epochs = epochs;
    s.std = Matrix::Zero(static_cast<Eigen::Index>(T), q);
    s.dist = Matrix::Zero(static_cast<Eigen::Index>(T), q);
    for (std::size_t t = 0; t < T; ++t) {
        Matrix mean = Matrix::Zero(wopt_rot.rows(), q);
        for (std::size_t m = 0; m < M; ++m) mean += rotated[m][t];
        mean /= static_cast<double>(M);
        Matrix var = Matrix::Zero(wopt_rot.rows(), q);
        for (std::size_t m = 0; m < M; ++m) {
            var += (rotated[m][t] - mean).cwiseAbs2();
            s.dist.row(static_cast<Eigen::Index>(t)) += (rotated[m][t] - wopt_rot).colwise().norm();
        }
        s.std.row(static_cast<Eigen::Index>(t)) = (var.colwise().sum() / static_cast<double>(M)).cwiseSqrt();
        s.dist.row(static_cast<Eigen::Index>(t)) /= static_cast<double>(M);
    }
    return s;
}

std::vector<double> half_times(const PcStats& s) {
    const Eigen::Index T = s.std.rows(), q = s.std.cols();
    std::vector<double> out(static_cast<std::size_t>(q), kNaN);
    for (Eigen::Index j = 0; j < q; ++j) {
        const double s0 = s.std(0, j);
        if (!(s0 > 0)) continue;
        const double half = 0.5 * s0;
        for (Eigen::Index t = 1; t < T; ++t) {
            const double a = s.std(t - 1, j), b = s.std(t, j);
            if (b > half) continue;
            const double ta = s.epochs[t - 1], tb = s.epochs[t];
            double frac;
            if (b > 0 && a > 0)
                frac = (std::log(a) - std::log(half)) / (std::log(a) - std::log(b));
            else
                frac = (a - half) / (a - b);
            out[j] = ta + std::clamp(frac, 0.0, 1.0) * (tb - ta);
            break;
        }
    }
    return out;
}

OrderCheck index_order(const std::vector<double>& halftimes, int count) {
    require(count >= 3 && count <= static_cast<int>(halftimes.size()), "index_order: bad component count");
    OrderCheck oc;
    double maxv = 0;
    for (int j = 0; j < count; ++j)
        if (!std::isnan(halftimes[j])) maxv = std::max(maxv, halftimes[j]);
    std::vector<double> idx(count), ht(count);
    for (int j = 0; j < count; ++j) {
        idx[j] = j + 1;
        if (std::isnan(halftimes[j])) {
            ++oc.censored;
            ht[j] = 2 * maxv + 1;  // ranks after every observed half-time
        } else {
            ht[j] = halftimes[j];
        }
    }
    try {
        oc.spearman = correlate(idx, ht, CorrKind::Spearman).r;
    } catch (const ValidationError&) {
        oc.spearman = 0;  // all half-times equal
    }
    return oc;
}

std::vector<std::vector<Matrix>> rotate_traces(const std::vector<TrainTrace>& traces, const SpectralBasis& basis) {
    std::vector<std::vector<Matrix>> out;
    for (const auto& tr : traces) {
        std::vector<Matrix> r;
        for (const auto& s : tr.snapshots) r.push_back(s.compact * basis.U);
        out.push_back(std::move(r));
    }
    return out;
}

void add_pc_tables(ExperimentResult& res, const std::string& prefix, const PcStats& s,
                   const std::vector<double>& halftimes, const SpectralBasis& basis, bool plots) {
    CsvWriter stats({"epoch", "pc", "std", "mean_distance"});
    for (Eigen::Index t = 0; t < s.std.rows(); ++t)
        for (Eigen::Index j = 0; j < s.std.cols(); ++j)
            stats.row({cell(s.epochs[t]), cell(j + 1), cell(s.std(t, j)), cell(s.dist(t, j))});
    res.files[prefix + "pc_stats.csv"] = stats.str();
    CsvWriter ht({"pc", "eigenvalue", "half_time"});
    for (std::size_t j = 0; j < halftimes.size(); ++j)
        ht.row({cell(j + 1), cell(basis.d(static_cast<Eigen::Index>(j))),
                std::isnan(halftimes[j]) ? std::string("nan") : cell(halftimes[j])});
    res.files[prefix + "halftimes.csv"] = ht.str();
    if (!plots) return;
    std::vector<Series> ss, sd;
    const Eigen::Index q = s.std.cols();
    for (Eigen::Index j : {Eigen::Index(0), q / 8, q / 4, q / 2, q - 1}) {
        if (j >= q) continue;
        Series a{"PC " + std::to_string(j + 1), {}, {}}, b = a;
        for (Eigen::Index t = 0; t < s.std.rows(); ++t) {
            a.x.push_back(s.epochs[t]);
            a.y.push_back(s.std(t, j));
            b.x.push_back(s.epochs[t]);
            b.y.push_back(s.dist(t, j));
        }
        ss.push_back(a);
        sd.push_back(b);
    }
    res.files[prefix + "pc_std.svg"] = svg_line_plot({"cross-member std per principal direction", "epoch", "std", true}, ss);
    res.files[prefix + "pc_distance.svg"] =
        svg_line_plot({"mean distance to optimum per principal direction", "epoch", "distance", true}, sd);
}

std::string bool_cell(bool b) { return b ? "1" : "0"; }

int first_exceed(const std::vector<int>& epochs, const std::vector<double>& v, double factor) {
    if (v.empty()) return -1;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > factor * v[0]) return epochs[i];
    return -1;
}

}  // namespace pcbias::exp
