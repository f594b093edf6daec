#include "helpers.hpp"
#include "pcbias/datagen.hpp"
#include "pcbias/linnet.hpp"
#include "pcbias/spectra.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace pcbias;
using namespace pcbias::test;

namespace {

double ls_accuracy(const Dataset& fit, const Dataset& eval) {
    const Matrix W = optimal_solution(fit);
    const auto c = correctness(W * eval.X, eval.labels);
    return std::count(c.begin(), c.end(), 1) / static_cast<double>(c.size());
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("pcbias_test_" + name)).string();
}

}  // namespace

TEST_CASE("profiles") {
    const auto p = make_profile("powerlaw:2", 4);
    CHECK(p[3] == doctest::Approx(1.0 / 16));
    const auto g = make_profile("geometric:3", 3);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[2] == doctest::Approx(1.0 / 9));
    const auto f = make_profile("flat", 5);
    CHECK(std::all_of(f.begin(), f.end(), [](double v) { return v == 1.0; }));
    CHECK(make_profile("list:3,2,1", 3)[1] == 2.0);
    CHECK_THROWS(make_profile("powerlaw", 3));
    CHECK_THROWS(make_profile("list:1,2", 3));

    const auto s = signal_law(g, 2, 2.0, 0.5);
    REQUIRE(s.size() == 2);
    CHECK(s[1].first == 2);
    CHECK(s[1].second == doctest::Approx(2.0 / std::sqrt(3.0)));
}

TEST_CASE("gaussian classes have the requested covariance") {
    SpectrumSpec spec;
    spec.q = 4;
    spec.n_per_class = 4000;
    spec.profile = make_profile("flat", 4);
    const Dataset d = gaussian_classes(spec, 1);
    CHECK(d.n() == 8000);
    const Matrix C = covariance(d.X) / static_cast<double>(d.n());
    CHECK(max_abs(C - Matrix::Identity(4, 4)) < 5 / std::sqrt(8000.0));

    spec.n_per_class = 0;
    CHECK_THROWS_AS(gaussian_classes(spec, 1), ValidationError);
}

TEST_CASE("signal along the first direction only") {
    SpectrumSpec spec;
    spec.q = 6;
    spec.n_per_class = 1000;
    spec.profile = make_profile("powerlaw:1", 6);
    spec.signal = {{1, 0.8}};
    const Dataset d = gaussian_classes(spec, 2);
    const Matrix U = generator_basis(spec, 2);
    const Dataset pc1 = with_features(d, U.col(0) * (U.col(0).transpose() * d.X));
    CHECK(std::abs(ls_accuracy(pc1, pc1) - ls_accuracy(d, d)) < 0.01);
}

TEST_CASE("symmetric binary data") {
    SpectrumSpec spec;
    spec.q = 5;
    spec.n_per_class = 300;
    spec.profile = make_profile("powerlaw:1", 5);
    spec.signal = signal_law(spec.profile, 5, 1.0, 0.5);
    const Dataset d = symmetric_binary(spec, 3);
    CHECK(d.n() == 600);
    CHECK(max_abs(d.X.rowwise().sum()) < 1e-10);
    const Vector y = d.signed_labels();
    for (Eigen::Index i = 0; i < d.n(); i += 2) {
        CHECK(max_abs(d.X.col(i) + d.X.col(i + 1)) == 0.0);
        CHECK(y(i) == -y(i + 1));
    }
}

TEST_CASE("frequency dataset") {
    const auto& phi = fixed_phases();
    REQUIRE(phi.size() == 10);
    CHECK(phi[1] == 3.46);
    CHECK(phi[9] == 5.16);
    const auto kappa = fixed_frequencies();
    for (int i = 0; i < 10; ++i) CHECK(kappa[i] == i);

    const Dataset d = frequency_dataset(kappa, phi, 2000, 4);
    CHECK(d.q() == 2);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double z = d.X(0, i);
        CHECK(std::abs(z) <= 1.0);
        double s = 0;
        for (int k = 0; k < 10; ++k) s += std::sin(2 * M_PI * kappa[k] * z + phi[k]);
        CHECK(d.labels[i] == (s > 0 ? 1 : 0));
    }

    const Dataset c = frequency_dataset({0.0}, {0.7}, 200, 5);
    CHECK(std::all_of(c.labels.begin(), c.labels.end(), [&](int l) { return l == c.labels[0]; }));
    CHECK(frequency_lambda({0.0}, {0.7}, 0.3) == doctest::Approx(std::sin(0.7)));
}

TEST_CASE("shuffled labels") {
    SpectrumSpec spec;
    spec.q = 10;
    spec.n_per_class = 1000;
    spec.profile = make_profile("powerlaw:1", 10);
    spec.signal = signal_law(spec.profile, 10, 1.0, 0.5);
    const Dataset d = gaussian_classes(spec, 6);
    const Dataset s = shuffle_labels(d, 7);
    CHECK(s.labels != d.labels);
    CHECK(s.class_counts() == d.class_counts());

    // no usable signal left: held-out accuracy near chance
    std::vector<Eigen::Index> a, b;
    for (Eigen::Index i = 0; i < s.n(); ++i) (i % 2 ? b : a).push_back(i);
    const double acc = ls_accuracy(subset(s, a), subset(s, b));
    const double se = std::sqrt(0.25 / static_cast<double>(b.size()));
    CHECK(std::abs(acc - 0.5) < 3 * se);
    CHECK(ls_accuracy(subset(d, a), subset(d, b)) > 0.8);
}

TEST_CASE("separable by top components") {
    SpectrumSpec spec;
    spec.q = 16;
    spec.n_per_class = 200;
    spec.profile = make_profile("powerlaw:1", 16);
    spec.signal = signal_law(spec.profile, 16, 0.1, 0.0);
    const Dataset d = gaussian_classes(spec, 8);
    const auto basis = principal_basis(d.X);
    for (int P : {2, 5}) {
        for (auto src : {LabelSource::Original, LabelSource::Shuffled}) {
            SeparableInfo info;
            const Dataset s = make_separable_by_top_pcs(d, P, src, 9, &info);
            const Dataset proj = with_features(s, project_to_top_pcs(s.X, basis, P));
            CHECK(ls_accuracy(proj, proj) == 1.0);
            CHECK(info.iterations >= 1);
        }
    }
    // starting from the original labels keeps more of them than starting from shuffled ones
    const Dataset o = make_separable_by_top_pcs(d, 2, LabelSource::Original, 9);
    const Dataset sh = make_separable_by_top_pcs(d, 2, LabelSource::Shuffled, 9);
    auto agree = [&](const Dataset& x) {
        int n = 0;
        for (std::size_t i = 0; i < d.labels.size(); ++i) n += x.labels[i] == d.labels[i];
        return n / static_cast<double>(d.labels.size());
    };
    CHECK(agree(o) > agree(sh));
    CHECK(std::abs(agree(sh) - 0.5) < 0.15);

    // already separable on all q components
    const Dataset full = make_separable_by_top_pcs(d, 16, LabelSource::Original, 9);
    if (ls_accuracy(d, d) == 1.0) CHECK(full.labels == d.labels);
    const Dataset twice = make_separable_by_top_pcs(full, 16, LabelSource::Original, 9);
    CHECK(twice.labels == full.labels);
}

TEST_CASE("dataset files") {
    const Dataset d = random_dataset(3, 4, 17, 10);
    for (auto fmt : {DataFormat::Csv, DataFormat::RawF64}) {
        const std::string path = temp_path(fmt == DataFormat::Csv ? "rt.csv" : "rt.pcb");
        save_dataset(d, path, fmt);
        const Dataset e = load_dataset(path, fmt);
        CHECK(e.K == d.K);
        CHECK(e.labels == d.labels);
        CHECK(max_abs(e.X - d.X) == 0.0);

        Dataset empty;
        empty.X = Matrix::Zero(3, 0);
        empty.K = 2;
        save_dataset(empty, path, fmt);
        const Dataset f = load_dataset(path, fmt);
        CHECK(f.n() == 0);
        CHECK(f.q() == 3);

        save_dataset(d, path, fmt);
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size / 2);
        CHECK_THROWS_AS(load_dataset(path, fmt), ParseError);
        std::filesystem::remove(path);
    }
    CHECK(parse_data_format("raw-f64") == DataFormat::RawF64);
    CHECK_THROWS(parse_data_format("xml"));
}
