#include "runners.hpp"
#include "support.hpp"

#include "pcbias/kernels.hpp"
#include "pcbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pcbias::exp {

namespace {

double accuracy(const Matrix& W, const Dataset& d) {
    const auto c = correctness(W * d.X, d.labels);
    return d.n() == 0 ? 0.0 : static_cast<double>(std::accumulate(c.begin(), c.end(), 0)) / static_cast<double>(d.n());
}

double bits_mean(const std::vector<std::uint8_t>& c) {
    return c.empty() ? 0.0 : static_cast<double>(std::accumulate(c.begin(), c.end(), 0)) / static_cast<double>(c.size());
}

void note_divergence(ExperimentResult& res, const std::vector<TrainTrace>& traces) {
    for (const auto& t : traces)
        if (t.diverged) {
            res.diverged = true;
            res.error = t.error;
        }
}

// correlation that reports NaN instead of failing on constant input
double safe_corr(const Vector& a, const Vector& b, CorrKind kind) {
    try {
        return correlate(a, b, kind).r;
    } catch (const ValidationError&) {
        return kNaN;
    }
}

std::string pname(int P) { return "P" + std::to_string(P); }

}  // namespace

ExperimentResult run_projection_eval(const Config& cfg, bool plots) {
    DataParams dp;
    dp.test_per_class = 250;
    dp.read(cfg);
    ModelParams mp;
    mp.read(cfg);
    TrainParams tp;
    tp.ensemble = 5;
    tp.read(cfg);
    auto Ps = cfg.get_ints("projection", "P", {1, 2, 4, 8, 16});
    cfg.check_unused();
    require(dp.test_per_class > 0 || !dp.test_path.empty(), "projection-eval needs a test set");

    const std::uint64_t master = cfg.seed();
    const DataBundle data = make_data(dp, master);
    const SpectralBasis basis = principal_basis(data.train.X);
    for (int P : Ps) require(P >= 1 && P <= basis.dim(), "projection.P outside [1, q]");
    std::vector<Dataset> projected;
    for (int P : Ps) projected.push_back(with_features(data.test, project_to_top_pcs(data.test.X, basis, P)));

    const auto widths = mp.widths(static_cast<int>(data.train.q()), data.train.K);
    const TrainConfig tc = tp.config(data.train, mp.depth);
    const auto traces = train_ensemble(widths, mp, data.train, tc, tp.ensemble, master);

    ExperimentResult res;
    note_divergence(res, traces);
    const std::size_t T = traces[0].snapshots.size();
    CsvWriter table({"epoch", "projection", "accuracy"});
    std::vector<Series> curves(Ps.size() + 1);
    curves[0].name = "full";
    for (std::size_t i = 0; i < Ps.size(); ++i) curves[i + 1].name = "top " + std::to_string(Ps[i]);
    std::vector<double> gain(Ps.size(), -1), final_acc(Ps.size() + 1, 0);
    for (std::size_t t = 0; t < T; ++t) {
        const int epoch = traces[0].snapshots[t].epoch;
        std::vector<double> acc(Ps.size() + 1, 0.0);
        for (const auto& tr : traces) {
            if (t >= tr.snapshots.size()) continue;
            const Matrix& W = tr.snapshots[t].compact;
            acc[0] += accuracy(W, data.test) / traces.size();
            for (std::size_t i = 0; i < Ps.size(); ++i) acc[i + 1] += accuracy(W, projected[i]) / traces.size();
        }
        for (std::size_t i = 0; i <= Ps.size(); ++i) {
            table.row({cell(epoch), i == 0 ? std::string("full") : cell(Ps[i - 1]), cell(acc[i])});
            curves[i].x.push_back(epoch);
            curves[i].y.push_back(acc[i]);
            if (i > 0 && t > 0) gain[i - 1] = std::max(gain[i - 1], acc[i] - acc[0]);
        }
        final_acc = acc;
    }
    res.files["projection_accuracy.csv"] = table.str();
    if (plots)
        res.files["projection_accuracy.svg"] =
            svg_line_plot({"test accuracy on projected examples", "epoch", "accuracy", false}, curves);
    res.put("mu", tc.mu);
    res.put("final_accuracy_full", final_acc[0]);
    for (std::size_t i = 0; i < Ps.size(); ++i) {
        res.put("final_accuracy_" + pname(Ps[i]), final_acc[i + 1]);
        res.put("max_gain_over_full_" + pname(Ps[i]), gain[i]);
    }
    return res;
}

ExperimentResult run_amplify_earlystop(const Config& cfg, bool plots) {
    DataParams dp;
    dp.test_per_class = 250;
    dp.n_per_class = 250;
    dp.q = 64;
    dp.read(cfg);
    ModelParams mp;
    mp.depth = 2;
    mp.read(cfg);
    TrainParams tp;
    tp.ensemble = 5;
    tp.epochs = 200;
    tp.read(cfg);
    const double fraction = cfg.get_double("amplify", "fraction", 0.015);
    const double factor = cfg.get_double("amplify", "factor", 10.0);
    const bool renormalize = cfg.get_bool("amplify", "renormalize", true);
    cfg.check_unused();
    require(fraction > 0 && fraction <= 1, "amplify.fraction must be in (0, 1]");
    require(factor > 0, "amplify.factor must be positive");
    require(dp.test_per_class > 0 || !dp.test_path.empty(), "amplify-earlystop needs a test set");

    const std::uint64_t master = cfg.seed();
    const DataBundle data = make_data(dp, master);
    const SpectralBasis basis = principal_basis(data.train.X);
    const int q = static_cast<int>(basis.dim());
    const int count = std::max(1, static_cast<int>(std::lround(fraction * q)));

    struct Variant {
        std::string name;
        int first, last;
    };
    const std::vector<Variant> variants{{"none", 1, 1}, {"top", 1, count}, {"bottom", q - count + 1, q}};
    ExperimentResult res;
    CsvWriter table({"variant", "member", "epoch", "test_accuracy"});
    std::vector<Series> curves;
    res.put("amplified_components", count);
    for (const auto& v : variants) {
        DataBundle b = data;
        if (v.name != "none") {
            b.train.X = amplify_pcs(data.train.X, basis, v.first, v.last, factor, false);
            b.test.X = amplify_pcs(data.test.X, basis, v.first, v.last, factor, false);
            if (renormalize) {
                // channel statistics from the training set, applied to both
                const Vector mean = b.train.X.rowwise().mean();
                Vector sd = (b.train.X.colwise() - mean).array().square().rowwise().mean().sqrt().matrix();
                for (Eigen::Index r = 0; r < sd.size(); ++r)
                    if (sd(r) == 0) sd(r) = 1;
                b.train.X = ((b.train.X.colwise() - mean).array().colwise() / sd.array()).matrix();
                b.test.X = ((b.test.X.colwise() - mean).array().colwise() / sd.array()).matrix();
            }
        }
        const auto widths = mp.widths(static_cast<int>(b.train.q()), b.train.K);
        TrainConfig tc = tp.config(b.train, mp.depth);
        tc.record_compact = false;
        tc.record_correctness = true;
        tc.eval = &b.test;
        const auto traces = train_ensemble(widths, mp, b.train, tc, tp.ensemble, master);
        note_divergence(res, traces);
        double best_epoch = 0, best_acc = 0, final_acc = 0;
        Series curve{v.name, {}, {}};
        std::vector<double> mean_curve(traces[0].snapshots.size(), 0.0);
        for (std::size_t m = 0; m < traces.size(); ++m) {
            int be = 0;
            double ba = -1;
            for (std::size_t k = 0; k < traces[m].snapshots.size(); ++k) {
                const auto& s = traces[m].snapshots[k];
                const double a = bits_mean(s.correct);
                table.row({v.name, cell(m), cell(s.epoch), cell(a)});
                if (a > ba) ba = a, be = s.epoch;  // ties keep the earliest epoch
                if (k < mean_curve.size()) mean_curve[k] += a / traces.size();
            }
            best_epoch += static_cast<double>(be) / traces.size();
            best_acc += ba / traces.size();
            final_acc += bits_mean(traces[m].snapshots.back().correct) / traces.size();
        }
        for (std::size_t k = 0; k < mean_curve.size(); ++k) {
            curve.x.push_back(traces[0].snapshots[k].epoch);
            curve.y.push_back(mean_curve[k]);
        }
        curves.push_back(curve);
        res.put(v.name + "_mu", tc.mu);
        res.put(v.name + "_best_epoch", best_epoch);
        res.put(v.name + "_best_accuracy", best_acc);
        res.put(v.name + "_final_accuracy", final_acc);
    }
    res.files["amplify_accuracy.csv"] = table.str();
    if (plots)
        res.files["amplify_accuracy.svg"] =
            svg_line_plot({"test accuracy with amplified components", "epoch", "accuracy", false}, curves);
    return res;
}

ExperimentResult run_random_labels(const Config& cfg, bool plots) {
    DataParams dp;
    dp.q = 256;
    dp.n_per_class = 100;
    dp.read(cfg);
    ModelParams mp;
    mp.depth = 2;
    mp.read(cfg);
    TrainParams tp;
    tp.epochs = 100;
    tp.read(cfg);
    const double eps = cfg.get_double("whiten", "eps", 1e-12);
    const bool per_example = cfg.get_bool("whiten", "per_example", true);
    const int sep_q = static_cast<int>(cfg.get_int("separable", "q", 64));
    const int sep_n = static_cast<int>(cfg.get_int("separable", "n_per_class", 250));
    const auto Ps = cfg.get_ints("separable", "P", {2, 8, 32});
    const double target = cfg.get_double("separable", "accuracy", 0.9);
    const int sep_epochs = static_cast<int>(cfg.get_int("separable", "epochs", 2000));
    const int sep_members = static_cast<int>(cfg.get_int("separable", "members", 5));
    const double sep_lr_scale = cfg.get_double("separable", "lr_scale", tp.lr_scale);
    const double sep_signal = cfg.get_double("separable", "signal_scale", 0.1);
    cfg.check_unused();
    require(dp.classes == 2, "random-labels needs binary data");
    require(sep_members >= 1 && sep_epochs >= 1, "separable.members and separable.epochs must be positive");

    const std::uint64_t master = cfg.seed();
    ExperimentResult res;

    // part 1: fixed budget, true vs shuffled labels, raw and whitened
    const DataBundle raw = make_data(dp, master);
    const DataBundle white = whiten(raw, eps, per_example);
    const int seeds = tp.ensemble;
    CsvWriter lt({"seed", "data", "true_loss", "shuffled_loss", "gap"});
    for (int w = 0; w < 2; ++w) {
        const Dataset& tr = w == 0 ? raw.train : white.train;
        const std::string name = w == 0 ? "raw" : "whitened";
        const auto widths = mp.widths(static_cast<int>(tr.q()), tr.K);
        TrainConfig tc = tp.config(tr, mp.depth);
        tc.record_compact = false;
        tc.cadence = std::max(1, tp.epochs);
        std::vector<double> lt_true(seeds), lt_shuf(seeds);
        std::vector<std::string> errs(seeds);
        kernels::parallel_for(static_cast<std::size_t>(seeds), [&](std::size_t s) {
            const std::uint64_t ms = member_seed(master, s);
            const Dataset shuf = shuffle_labels(tr, ms ^ 0x1abe1);
            for (int k = 0; k < 2; ++k) {
                DeepLinearNet net = init_network(widths, mp.scheme(), ms, mp.distribution());
                TrainConfig c = tc;
                c.seed = ms ^ 0xb47c;
                const TrainTrace t = train(net, k == 0 ? tr : shuf, c);
                if (t.diverged) errs[s] = t.error;
                (k == 0 ? lt_true : lt_shuf)[s] = t.snapshots.back().loss;
            }
        });
        int lower = 0;
        double gap = 0;
        for (int s = 0; s < seeds; ++s) {
            if (!errs[s].empty()) {
                res.diverged = true;
                res.error = errs[s];
            }
            lower += lt_true[s] < lt_shuf[s];
            gap += (lt_shuf[s] - lt_true[s]) / seeds;
            lt.row({cell(s), name, cell(lt_true[s]), cell(lt_shuf[s]), cell(lt_shuf[s] - lt_true[s])});
        }
        res.put(name + "_mu", tc.mu);
        res.put(name + "_true_lower_count", lower);
        res.put(name + "_mean_gap", gap);
    }
    res.put("seeds", seeds);
    res.put("gap_ratio", std::abs(res.at("whitened_mean_gap")) / res.at("raw_mean_gap"));
    res.files["label_loss.csv"] = lt.str();

    // part 2: labels separable by the top-P principal coordinates
    DataParams sp = dp;
    sp.q = sep_q;
    sp.n_per_class = sep_n;
    sp.test_per_class = 0;
    sp.signal_scale = sep_signal;  // weak class signal, so original labels need flipping at every P
    const Dataset base = make_data(sp, master ^ 0x5e9a).train;
    const SpectralBasis basis = principal_basis(base.X);
    for (int P : Ps) require(P >= 1 && P <= basis.dim(), "separable.P outside [1, q]");
    CsvWriter st({"source", "P", "member", "epochs_to_target", "flipped"});
    std::vector<Series> curves;
    for (int src = 0; src < 2; ++src) {
        const LabelSource from = src == 0 ? LabelSource::Original : LabelSource::Shuffled;
        const std::string sname = src == 0 ? "original" : "shuffled";
        std::vector<double> means;
        Series curve{sname, {}, {}};
        for (int P : Ps) {
            SeparableInfo info;
            const Dataset d = make_separable_by_top_pcs(base, P, from, master ^ static_cast<std::uint64_t>(P), &info);
            const auto widths = mp.widths(static_cast<int>(d.q()), d.K);
            TrainParams stp = tp;
            stp.lr_scale = sep_lr_scale;
            TrainConfig tc = stp.config(d, mp.depth);
            tc.epochs = sep_epochs;
            tc.cadence = 1;
            tc.record_compact = false;
            tc.record_correctness = true;
            const auto traces = train_ensemble(widths, mp, d, tc, sep_members, master);
            note_divergence(res, traces);
            double mean = 0;
            int censored = 0;
            for (std::size_t m = 0; m < traces.size(); ++m) {
                int hit = -1;
                for (const auto& s : traces[m].snapshots)
                    if (bits_mean(s.correct) >= target) {
                        hit = s.epoch;
                        break;
                    }
                if (hit < 0) {
                    hit = sep_epochs + 1;
                    ++censored;
                }
                mean += static_cast<double>(hit) / traces.size();
                st.row({sname, cell(P), cell(m), cell(hit), cell(info.flipped)});
            }
            means.push_back(mean);
            curve.x.push_back(P);
            curve.y.push_back(mean);
            res.put(sname + "_" + pname(P) + "_epochs", mean);
            res.put(sname + "_" + pname(P) + "_censored", censored);
            res.put(sname + "_" + pname(P) + "_flipped", info.flipped);
        }
        bool inc = true;
        for (std::size_t i = 1; i < means.size(); ++i) inc &= means[i] > means[i - 1];
        res.put(sname + "_monotone", inc ? 1 : 0);
        curves.push_back(curve);
    }
    res.files["separable_speed.csv"] = st.str();
    if (plots)
        res.files["separable_speed.svg"] =
            svg_line_plot({"epochs to target accuracy", "P", "epochs", false}, curves);
    return res;
}

ExperimentResult run_loc_correlation(const Config& cfg, bool plots) {
    // class signal of fixed size in every direction, so the low-variance components carry
    // most of the separation and the class-mean direction alone classifies poorly
    DataParams dp;
    dp.profile = "powerlaw:2";
    dp.signal_scale = 0.04;
    dp.signal_exponent = 0.0;
    dp.test_per_class = 1000;
    dp.read(cfg);
    ModelParams mp;
    mp.depth = 2;
    mp.read(cfg);
    TrainParams tp;
    tp.epochs = 300;
    tp.read(cfg);
    const int half = static_cast<int>(cfg.get_int("loc", "ensemble_size", 5));
    const int horizon_cfg = static_cast<int>(cfg.get_int("loc", "horizon", -1));
    const bool refit = cfg.get_bool("loc", "refit", false);
    const double eps = cfg.get_double("whiten", "eps", 1e-12);
    const bool per_example = cfg.get_bool("whiten", "per_example", true);
    cfg.check_unused();
    require(half >= 1, "loc.ensemble_size must be positive");
    require(dp.test_per_class > 0 || !dp.test_path.empty(), "loc-correlation needs a test set");
    const int horizon = horizon_cfg < 0 ? tp.epochs : horizon_cfg;

    const std::uint64_t master = cfg.seed();
    const DataBundle raw = make_data(dp, master);
    const DataBundle white = whiten(raw, eps, per_example);
    const Eigen::Index nt = raw.test.n();

    ExperimentResult res;
    std::vector<Vector> acc;  // raw A, raw B, whitened A, whitened B, raw all
    for (int w = 0; w < 2; ++w) {
        const DataBundle& b = w == 0 ? raw : white;
        const auto widths = mp.widths(static_cast<int>(b.train.q()), b.train.K);
        TrainConfig tc = tp.config(b.train, mp.depth);
        tc.record_compact = false;
        tc.record_correctness = true;
        tc.eval = &b.test;
        const auto traces = train_ensemble(widths, mp, b.train, tc, 2 * half, master);
        note_divergence(res, traces);
        res.put(std::string(w == 0 ? "raw" : "whitened") + "_mu", tc.mu);
        // snapshots 1..horizon (epoch 0 is the untrained net)
        std::vector<std::size_t> use;
        for (std::size_t k = 0; k < traces[0].snapshots.size(); ++k) {
            const int e = traces[0].snapshots[k].epoch;
            if (e >= 1 && e <= horizon) use.push_back(k);
        }
        require(!use.empty(), "loc.horizon selects no snapshots");
        auto tensor = [&](int first, int count) {
            PredictionTensor t(count, use.size(), nt);
            for (int m = 0; m < count; ++m)
                for (std::size_t e = 0; e < use.size(); ++e) {
                    const auto& snaps = traces[first + m].snapshots;
                    const auto& c = snaps[std::min(use[e], snaps.size() - 1)].correct;
                    for (Eigen::Index x = 0; x < nt; ++x) t.at(m, e, x) = c[x];
                }
            return accessibility(t);
        };
        acc.push_back(tensor(0, half));
        acc.push_back(tensor(half, half));
        if (w == 0) acc.push_back(tensor(0, 2 * half));
    }
    const double r_raw = safe_corr(acc[0], acc[1], CorrKind::Pearson);
    const double r_white = safe_corr(acc[3], acc[4], CorrKind::Pearson);

    const SpectralBasis basis = principal_basis(raw.train.X);
    const int q = static_cast<int>(basis.dim());
    const CriticalPcEvaluator crit(raw.train, basis, refit);
    const auto cp = crit.all(raw.test, q);
    Vector cpv(nt);
    int none = 0;
    for (Eigen::Index i = 0; i < nt; ++i) {
        cpv(i) = cp[i] ? *cp[i] : q + 1;
        none += !cp[i];
    }
    const double rho = safe_corr(cpv, acc[2], CorrKind::Spearman);

    // fastest-learned quintile by the first ensemble
    std::vector<Eigen::Index> order(static_cast<std::size_t>(nt));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return acc[0](a) > acc[0](b); });
    std::vector<int> fast(static_cast<std::size_t>(nt), 0);
    for (Eigen::Index i = 0; i < nt / 5; ++i) fast[order[i]] = 1;

    CsvWriter table({"example", "label", "accessibility_a", "accessibility_b", "whitened_accessibility_a",
                     "whitened_accessibility_b", "critical_pc", "fast_quintile"});
    for (Eigen::Index i = 0; i < nt; ++i)
        table.row({cell(i), cell(raw.test.labels[i]), cell(acc[0](i)), cell(acc[1](i)), cell(acc[3](i)),
                   cell(acc[4](i)), cp[i] ? cell(*cp[i]) : std::string("none"), cell(fast[i])});
    res.files["accessibility.csv"] = table.str();
    if (plots) {
        // mean accessibility per critical PC
        Series s{"mean accessibility", {}, {}};
        for (int P = 1; P <= q + 1; ++P) {
            double sum = 0;
            int c = 0;
            for (Eigen::Index i = 0; i < nt; ++i)
                if (cpv(i) == P) sum += acc[2](i), ++c;
            if (c) {
                s.x.push_back(P);
                s.y.push_back(sum / c);
            }
        }
        res.files["critical_pc.svg"] =
            svg_line_plot({"accessibility by critical principal component", "critical PC", "accessibility", false}, {s});
    }
    res.put("horizon", horizon);
    res.put("raw_pearson", r_raw);
    res.put("whitened_pearson", r_white);
    res.put("critical_pc_spearman", rho);
    res.put("critical_pc_none", none);
    return res;
}

ExperimentResult run_frequency_bias(const Config& cfg, bool plots) {
    const auto kappa = cfg.get_doubles("frequency", "kappa", fixed_frequencies());
    const auto phi = cfg.get_doubles("frequency", "phi", fixed_phases());
    const int n = static_cast<int>(cfg.get_int("frequency", "n", 10000));
    const int k = static_cast<int>(cfg.get_int("frequency", "k", 20));
    const std::string space = cfg.get_string("frequency", "space", "raw");
    cfg.check_unused();
    require(kappa.size() == phi.size() && !kappa.empty(), "frequency.kappa and frequency.phi must match");
    require(space == "raw" || space == "z", "frequency.space must be raw or z");

    const Dataset d = frequency_dataset(kappa, phi, n, cfg.seed() ^ 0xf4e9);
    const int m = static_cast<int>(kappa.size());
    Vector crit(d.n());
    int none = 0, matches = 0;
    std::vector<int> hist(static_cast<std::size_t>(m + 2), 0);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double z = d.X(0, i);
        const auto c = critical_frequency(kappa, phi, z, d.labels[i]);
        // running prefix sums as a cross-check
        int brute = 0;
        double sum = 0;
        for (int j = 0; j < m && brute == 0; ++j) {
            sum += std::sin(2 * M_PI * kappa[j] * z + phi[j]);
            if ((d.labels[i] == 1 && sum > 0) || (d.labels[i] == 0 && sum < 0)) brute = j + 1;
        }
        matches += (c ? *c : 0) == brute;
        crit(i) = c ? *c : m + 1;
        none += !c;
        ++hist[c ? *c : m + 1];
    }
    const Matrix F = space == "raw" ? d.X : Matrix(d.X.topRows(1));
    const Vector disc = discriminability(F, d.labels, k);
    const double rho = safe_corr(disc, crit, CorrKind::Spearman);

    ExperimentResult res;
    CsvWriter table({"example", "z", "y", "label", "critical_frequency", "discriminability"});
    for (Eigen::Index i = 0; i < d.n(); ++i)
        table.row({cell(i), cell(d.X(0, i)), cell(d.X(1, i)), cell(d.labels[i]),
                   crit(i) > m ? std::string("none") : cell(static_cast<int>(crit(i))), cell(disc(i))});
    res.files["frequency_points.csv"] = table.str();
    CsvWriter ht({"critical_frequency", "count", "mean_discriminability"});
    Series s{"mean discriminability", {}, {}};
    std::vector<double> bin_j, bin_mean;
    for (int j = 1; j <= m + 1; ++j) {
        double sum = 0;
        for (Eigen::Index i = 0; i < d.n(); ++i)
            if (crit(i) == j) sum += disc(i);
        const int c = hist[j];
        ht.row({j > m ? std::string("none") : cell(j), cell(c), c ? cell(sum / c) : std::string("nan")});
        if (c) {
            s.x.push_back(j);
            s.y.push_back(sum / c);
            if (j <= m) {
                bin_j.push_back(j);
                bin_mean.push_back(sum / c);
            }
        }
    }
    // per-frequency means, the granularity of the published plot
    const double rho_binned =
        bin_j.size() >= 3 ? safe_corr(Eigen::Map<const Vector>(bin_j.data(), static_cast<Eigen::Index>(bin_j.size())),
                                      Eigen::Map<const Vector>(bin_mean.data(), static_cast<Eigen::Index>(bin_mean.size())),
                                      CorrKind::Spearman)
                          : std::nan("");
    res.files["critical_frequency_hist.csv"] = ht.str();
    if (plots)
        res.files["critical_frequency.svg"] =
            svg_line_plot({"discriminability by critical frequency", "critical frequency", "discriminability", false},
                          {s});
    res.put("n", n);
    res.put("k", k);
    res.put("oracle_match_fraction", static_cast<double>(matches) / d.n());
    res.put("critical_none", none);
    res.put("spearman_discriminability", rho);
    res.put("spearman_discriminability_binned", rho_binned);
    return res;
}

}  // namespace pcbias::exp
