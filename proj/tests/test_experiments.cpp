#include "helpers.hpp"
#include "pcbias/config.hpp"
#include "pcbias/csv.hpp"
#include "pcbias/datagen.hpp"
#include "pcbias/experiments.hpp"
#include "pcbias/linnet.hpp"
#include "pcbias/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace pcbias;
using namespace pcbias::test;

namespace {

const char* kTiny[] = {
    "kind: pc-convergence\ndata:\n  q: 8\nmodel:\n  width: 16\n  depth: 3\ntrain:\n  epochs: 20\n  ensemble: 3\n",
    "kind: whitening-control\ndata:\n  q: 8\nmodel:\n  width: 16\n  depth: 3\ntrain:\n  epochs: 20\n  ensemble: 3\n",
    "kind: thm3-check\nmodel:\n  width: 32\ncheck:\n  steps: 5\n  components: 4\n  seeds: 1\n",
    "kind: thm4-check\nmodel:\n  width: 32\ncheck:\n  steps: 5\n  components: 4\n  seeds: 1\n",
    "kind: randmat-verify\nrandmat:\n  widths: [16, 32]\n  trials: 30\n",
    "kind: relu-pcbias\ndata:\n  q: 6\n  n_per_class: 100\ntrain:\n  epochs: 10\n  ensemble: 2\n",
    "kind: projection-eval\ndata:\n  q: 8\nprojection:\n  P: [1, 2, 4]\nmodel:\n  width: 16\n  depth: 3\ntrain:\n  epochs: 10\n  ensemble: 2\n",
    "kind: amplify-earlystop\ndata:\n  q: 16\nmodel:\n  width: 16\n  depth: 3\ntrain:\n  epochs: 10\n  ensemble: 2\n",
    "kind: random-labels\ndata:\n  q: 16\n  n_per_class: 20\nmodel:\n  width: 16\ntrain:\n  epochs: 10\n  ensemble: 2\n"
    "separable:\n  q: 16\n  n_per_class: 30\n  P: [2, 4]\n  epochs: 40\n  members: 2\n",
    "kind: loc-correlation\ndata:\n  q: 8\n  n_per_class: 60\n  test_per_class: 40\nmodel:\n  width: 16\n  depth: 3\n"
    "train:\n  epochs: 10\nloc:\n  ensemble_size: 2\n",
    "kind: frequency-bias\nfrequency:\n  n: 500\n",
};

}  // namespace

TEST_CASE("every experiment kind runs on a tiny config") {
    CHECK(experiment_kinds().size() == 11);
    for (const char* text : kTiny) {
        const Config cfg = Config::from_string(text);
        CAPTURE(cfg.kind());
        const ExperimentResult r = run_experiment(cfg);
        CHECK(r.kind == cfg.kind());
        CHECK(!r.summary.empty());
        CHECK(!r.diverged);
        for (const auto& [k, v] : r.summary) CHECK(!std::isinf(v));
    }
}

TEST_CASE("same config and seed give identical outputs") {
    for (const char* text : {kTiny[0], kTiny[9], kTiny[10]}) {
        const Config cfg = Config::from_string(text);
        const auto a = run_experiment(cfg), b = run_experiment(cfg);
        CHECK(a.summary_csv() == b.summary_csv());
        CHECK(a.files == b.files);
    }
    Config other = Config::from_string(kTiny[0]);
    other.set("", "seed", "5");
    CHECK(run_experiment(other).files != run_experiment(Config::from_string(kTiny[0])).files);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(run_experiment(Config::from_string("kind: no-such-kind\n")), ValidationError);
    try {
        run_experiment(Config::from_string("kind: thm3-check\ncheck:\n  steps: 2\n  stpes: 3\n"));
        FAIL("unknown key accepted");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    CHECK_THROWS_AS(Config::from_string("kind: [unclosed\n"), ParseError);
    CHECK_THROWS_AS(run_experiment(Config::from_string("kind: pc-convergence\ntrain:\n  epochs: -3\n")),
                    ValidationError);
    CHECK_THROWS(Config::from_string("kind: thm3-check\ncheck:\n  steps: many\n").get_int("check", "steps", 1));
}

TEST_CASE("csv numbers round trip") {
    for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.0, 123456789.0}) {
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    const auto cells = split_csv_line("a,1.5,,x");
    REQUIRE(cells.size() == 4);
    CHECK(cells[2].empty());
    CHECK_THROWS(parse_double("1.5x"));
    CHECK(parse_int("-42") == -42);
}

namespace {

// population std across members of column j, summed over classes in quadrature
double std_oracle(const std::vector<CompactTrace>& traces, const SpectralBasis& b, std::size_t s, int j) {
    const double n = static_cast<double>(traces.size());
    double total = 0;
    const Eigen::Index K = traces[0].compact[s].rows();
    for (Eigen::Index c = 0; c < K; ++c) {
        double m = 0, m2 = 0;
        for (const auto& t : traces) {
            const double v = (t.compact[s] * b.U)(c, j);
            m += v / n;
            m2 += v * v / n;
        }
        total += std::max(0.0, m2 - m * m);
    }
    return std::sqrt(total);
}

std::vector<std::vector<double>> read_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        for (auto c : split_csv_line(line)) r.push_back(parse_double(c));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("report merges traces") {
    Config cfg = Config::from_string(
        "kind: pc-convergence\ndata:\n  q: 6\nmodel:\n  width: 12\n  depth: 3\ntrain:\n  epochs: 15\n  ensemble: 10\n"
        "  cadence: 5\noutput:\n  traces: true\n");
    const ExperimentResult run = run_experiment(cfg);
    std::vector<CompactTrace> traces;
    for (int m = 0; m < 10; ++m) traces.push_back(trace_from_csv(run.files.at("trace_m" + std::to_string(m) + ".csv")));
    const Dataset& train = run.datasets.at("train.pcb");
    const auto b = principal_basis(train.X);
    REQUIRE(traces[0].epochs == std::vector<int>({0, 5, 10, 15}));

    const auto one = read_table(report_traces({traces[0]}, train).files.at("pc_stats.csv"));
    for (const auto& r : one) CHECK(r[2] == 0.0);

    const auto two = read_table(report_traces({traces[0], traces[0]}, train).files.at("pc_stats.csv"));
    REQUIRE(two.size() == one.size());
    for (std::size_t i = 0; i < two.size(); ++i) {
        CHECK(two[i][2] == 0.0);
        CHECK(two[i][3] == doctest::Approx(one[i][3]).epsilon(1e-14));
    }

    const auto all = read_table(report_traces(traces, train).files.at("pc_stats.csv"));
    const Matrix wopt = optimal_solution(train) * b.U;
    for (const auto& r : all) {
        const std::size_t s = static_cast<std::size_t>(r[0]) / 5;
        const int j = static_cast<int>(r[1]) - 1;
        CHECK(r[2] == doctest::Approx(std_oracle(traces, b, s, j)).epsilon(1e-10));
        double dist = 0;
        for (const auto& t : traces) dist += ((t.compact[s] * b.U).col(j) - wopt.col(j)).norm() / 10;
        CHECK(r[3] == doctest::Approx(dist).epsilon(1e-10));
    }

    CompactTrace bad = traces[1];
    bad.epochs.pop_back();
    bad.compact.pop_back();
    CHECK_THROWS_AS(report_traces({traces[0], bad}, train), DimensionError);
}
