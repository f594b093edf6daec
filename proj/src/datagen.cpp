#include "pcbias/datagen.hpp"

#include "pcbias/csv.hpp"
#include "pcbias/linnet.hpp"
#include "pcbias/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace pcbias {

void SpectrumSpec::validate() const {
    require(q >= 1, "spectrum: q must be positive");
    require(K >= 2, "spectrum: need at least two classes");
    require(n_per_class >= 1, "spectrum: empty dataset (n per class must be positive)");
    require(static_cast<int>(profile.size()) == q, "spectrum: profile length != q");
    for (int j = 0; j < q; ++j) {
        require(profile[j] > 0, "spectrum: profile values must be positive");
        require(j == 0 || profile[j] <= profile[j - 1], "spectrum: profile must be non-increasing");
    }
    for (const auto& [pc, mag] : signal)
        require(pc >= 1 && pc <= q, "spectrum: signal direction " + std::to_string(pc) + " outside [1, q]");
}

std::vector<double> make_profile(const std::string& text, int q) {
    require(q >= 1, "profile: q must be positive");
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    std::vector<double> p(q);
    if (kind == "flat") {
        std::fill(p.begin(), p.end(), 1.0);
    } else if (kind == "powerlaw") {
        const double a = parse_double(arg);
        for (int j = 0; j < q; ++j) p[j] = std::pow(j + 1.0, -a);
    } else if (kind == "geometric") {
        const double r = parse_double(arg);
        require(r >= 1, "profile: geometric ratio must be >= 1");
        for (int j = 0; j < q; ++j) p[j] = std::pow(r, -static_cast<double>(j));
    } else if (kind == "list") {
        std::vector<double> v;
        for (auto s : split_csv_line(arg)) v.push_back(parse_double(s));
        require(static_cast<int>(v.size()) == q, "profile: list length != q");
        p = v;
    } else {
        throw ValidationError("unknown profile '" + text + "'");
    }
    return p;
}

std::vector<std::pair<int, double>> signal_law(const std::vector<double>& profile, int count, double scale,
                                               double exponent) {
    require(count >= 0 && count <= static_cast<int>(profile.size()), "signal: count outside [0, q]");
    std::vector<std::pair<int, double>> s;
    for (int j = 0; j < count; ++j) s.emplace_back(j + 1, scale * std::pow(profile[j], exponent));
    return s;
}

Matrix generator_basis(const SpectrumSpec& spec, std::uint64_t seed) {
    if (!spec.random_basis) return Matrix::Identity(spec.q, spec.q);
    Rng rng = make_rng(seed, 0xba515);
    std::normal_distribution<double> g;
    Matrix G(spec.q, spec.q);
    for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = g(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < spec.q; ++j)
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
    return Q;
}

namespace {

Matrix sample_gaussian(const Matrix& U, const std::vector<double>& profile, Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> g;
    Vector s(static_cast<Eigen::Index>(profile.size()));
    for (std::size_t j = 0; j < profile.size(); ++j) s(j) = std::sqrt(profile[j]);
    Matrix Z(U.cols(), n);
    for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = g(rng);
    return U * (s.asDiagonal() * Z);
}

}  // namespace

Dataset gaussian_classes(const SpectrumSpec& spec, std::uint64_t seed) {
    spec.validate();
    const Matrix U = generator_basis(spec, seed);
    Matrix means = Matrix::Zero(spec.q, spec.K);
    for (const auto& [pc, mag] : spec.signal)
        for (int c = 0; c < spec.K; ++c) {
            const double s = (c == (pc - 1) % spec.K) ? 1.0 : -1.0 / (spec.K - 1);
            means.col(c) += mag * s * U.col(pc - 1);
        }
    Rng rng = make_rng(seed);
    Dataset d;
    d.K = spec.K;
    d.X = sample_gaussian(U, spec.profile, static_cast<Eigen::Index>(spec.K) * spec.n_per_class, rng);
    for (int c = 0; c < spec.K; ++c)
        for (int i = 0; i < spec.n_per_class; ++i) {
            d.X.col(c * spec.n_per_class + i) += means.col(c);
            d.labels.push_back(c);
        }
    return d;
}

Dataset symmetric_binary(const SpectrumSpec& spec, std::uint64_t seed) {
    require(spec.K == 2, "symmetric_binary: K must be 2");
    spec.validate();
    require(!spec.signal.empty(), "symmetric_binary: need a labeling direction");
    const Matrix U = generator_basis(spec, seed);
    Vector v = Vector::Zero(spec.q);
    for (const auto& [pc, mag] : spec.signal) v += mag * U.col(pc - 1);
    Rng rng = make_rng(seed);
    const Matrix H = sample_gaussian(U, spec.profile, spec.n_per_class, rng);
    Dataset d;
    d.K = 2;
    d.X.resize(spec.q, 2 * static_cast<Eigen::Index>(spec.n_per_class));
    for (Eigen::Index i = 0; i < H.cols(); ++i) {
        d.X.col(2 * i) = H.col(i);
        d.X.col(2 * i + 1) = -H.col(i);
        const bool pos = v.dot(H.col(i)) >= 0;
        d.labels.push_back(pos ? 0 : 1);
        d.labels.push_back(pos ? 1 : 0);
    }
    return d;
}

const std::vector<double>& fixed_phases() {
    static const std::vector<double> phi{0, 3.46, 5.08, 0.45, 2.10, 1.4, 5.36, 0.85, 5.9, 5.16};
    return phi;
}

std::vector<double> fixed_frequencies() {
    std::vector<double> k(10);
    std::iota(k.begin(), k.end(), 0.0);
    return k;
}

double frequency_lambda(const std::vector<double>& kappa, const std::vector<double>& phi, double z, int prefix) {
    require(!kappa.empty(), "frequency: empty frequency list");
    require(kappa.size() == phi.size(), "frequency: kappa and phi lengths differ");
    const std::size_t m = prefix < 0 ? kappa.size() : std::min<std::size_t>(prefix, kappa.size());
    double s = 0;
    for (std::size_t i = 0; i < m; ++i) s += std::sin(2 * std::numbers::pi * kappa[i] * z + phi[i]);
    return s;
}

Dataset frequency_dataset(const std::vector<double>& kappa, const std::vector<double>& phi, int n, std::uint64_t seed) {
    require(!kappa.empty(), "frequency: empty frequency list");
    require(kappa.size() == phi.size(), "frequency: kappa and phi lengths differ");
    require(n >= 0, "frequency: n must be non-negative");
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> uz(-1.0, 1.0), uw(-2 * std::numbers::pi, 2 * std::numbers::pi);
    Dataset d;
    d.K = 2;
    d.X.resize(2, n);
    for (int i = 0; i < n; ++i) {
        double z = uz(rng), lam = frequency_lambda(kappa, phi, z);
        // a constant lambda that is ~0 would loop forever; the caller gets an error instead
        for (int tries = 0; std::abs(lam) < 1e-9; ++tries) {
            require(tries < 1000, "frequency: lambda vanishes on the whole interval");
            z = uz(rng);
            lam = frequency_lambda(kappa, phi, z);
        }
        d.X(0, i) = z;
        d.X(1, i) = uw(rng);
        d.labels.push_back(lam > 0 ? 1 : 0);
    }
    return d;
}

Dataset shuffle_labels(const Dataset& data, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x5b0f);
    Dataset out = data;
    std::vector<std::size_t> perm(data.labels.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::shuffle(perm.begin(), perm.end(), rng);
        if (perm.size() < 2 || !std::is_sorted(perm.begin(), perm.end())) break;
    }
    for (std::size_t i = 0; i < perm.size(); ++i) out.labels[i] = data.labels[perm[i]];
    return out;
}

Dataset make_separable_by_top_pcs(const Dataset& data, int P, LabelSource from, std::uint64_t seed,
                                  SeparableInfo* info) {
    require(data.K == 2, "make_separable_by_top_pcs: K must be 2");
    require(P >= 1 && P <= data.q(), "make_separable_by_top_pcs: P out of range");
    const SpectralBasis basis = principal_basis(data.X);
    const Dataset start = from == LabelSource::Shuffled ? shuffle_labels(data, seed) : data;
    Dataset proj{basis.U.leftCols(P).transpose() * data.X, start.labels, 2};

    SeparableInfo si;
    for (si.iterations = 1; si.iterations <= 100; ++si.iterations) {
        const auto ok = correctness(optimal_solution(proj) * proj.X, proj.labels);
        bool changed = false;
        for (std::size_t i = 0; i < ok.size(); ++i)
            if (!ok[i]) {
                proj.labels[i] = 1 - proj.labels[i];
                changed = true;
            }
        if (!changed) break;
    }
    if (si.iterations > 100) throw ValidationError("make_separable_by_top_pcs: label flipping did not settle");
    for (std::size_t i = 0; i < proj.labels.size(); ++i) si.flipped += proj.labels[i] != start.labels[i];
    if (info) *info = si;
    return Dataset{data.X, proj.labels, 2};
}

DataFormat parse_data_format(const std::string& s) {
    if (s == "csv") return DataFormat::Csv;
    if (s == "raw" || s == "raw-f64") return DataFormat::RawF64;
    throw ValidationError("unknown data format '" + s + "'");
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

bool get_bytes(std::istream& is, unsigned char* b, std::size_t n) {
    is.read(reinterpret_cast<char*>(b), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is.gcount()) == n;
}

std::uint32_t get_u32(std::istream& is, const char* section) {
    unsigned char b[4];
    if (!get_bytes(is, b, 4)) throw ParseError(std::string("dataset file truncated in ") + section);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& is, const char* section) {
    unsigned char b[8];
    if (!get_bytes(is, b, 8)) throw ParseError(std::string("dataset file truncated in ") + section);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& path, DataFormat format) {
    data.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    if (format == DataFormat::RawF64) {
        f.write("PCB1", 4);
        put_u32(f, static_cast<std::uint32_t>(data.q()));
        put_u32(f, static_cast<std::uint32_t>(data.K));
        put_u32(f, static_cast<std::uint32_t>(data.n()));
        for (Eigen::Index i = 0; i < data.X.size(); ++i) put_f64(f, data.X.data()[i]);
        for (int y : data.labels) put_u32(f, static_cast<std::uint32_t>(y));
        return;
    }
    for (Eigen::Index r = 0; r < data.q(); ++r) f << 'x' << r << ',';
    f << "label\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index r = 0; r < data.q(); ++r) f << format_double(data.X(r, i)) << ',';
        f << data.labels[i] << '\n';
    }
}

Dataset load_dataset(const std::string& path, DataFormat format) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    Dataset d;
    if (format == DataFormat::RawF64) {
        unsigned char magic[4];
        if (!get_bytes(f, magic, 4)) throw ParseError("dataset file truncated in magic");
        if (std::memcmp(magic, "PCB1", 4) != 0) throw ParseError("bad magic: not a PCB1 dataset");
        const std::uint32_t q = get_u32(f, "header"), K = get_u32(f, "header"), n = get_u32(f, "header");
        d.K = static_cast<int>(K);
        d.X.resize(q, n);
        for (Eigen::Index i = 0; i < d.X.size(); ++i) d.X.data()[i] = get_f64(f, "data matrix");
        for (std::uint32_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(get_u32(f, "labels")));
        d.validate();
        return d;
    }
    std::string line;
    if (!std::getline(f, line)) throw ParseError("csv dataset: missing header");
    const auto head = split_csv_line(line);
    if (head.empty() || head.back() != "label") throw ParseError("csv dataset: malformed header (last column must be 'label')");
    const std::size_t q = head.size() - 1;
    std::vector<double> vals;
    int K = 0;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != q + 1)
            throw ParseError("csv dataset line " + std::to_string(lineno) + ": expected " + std::to_string(q + 1) +
                             " columns, got " + std::to_string(cells.size()));
        for (std::size_t r = 0; r < q; ++r) vals.push_back(parse_double(cells[r]));
        const auto y = parse_int(cells[q]);
        if (y < 0) throw ParseError("csv dataset line " + std::to_string(lineno) + ": negative label");
        d.labels.push_back(static_cast<int>(y));
        K = std::max(K, static_cast<int>(y) + 1);
    }
    d.K = K;
    d.X = Eigen::Map<Matrix>(vals.data(), static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(d.labels.size()));
    return d;
}

}  // namespace pcbias
