#include "runners.hpp"
#include "support.hpp"

#include "pcbias/kernels.hpp"
#include "pcbias/relu2.hpp"

#include <algorithm>
#include <cmath>

namespace pcbias::exp {

ExperimentResult run_relu_pcbias(const Config& cfg, bool plots) {
    DataParams dp;
    dp.source = "symmetric";
    dp.q = 32;
    dp.n_per_class = 2000;  // pairs, n = 4000
    dp.read(cfg);
    TrainParams tp;
    tp.epochs = 300;
    tp.read(cfg);
    const int m = static_cast<int>(cfg.get_int("relu", "width", 64));
    const double a_scale = cfg.get_double("relu", "a_scale", 1.0 / std::sqrt(static_cast<double>(m)));
    const int probes = static_cast<int>(cfg.get_int("relu", "linearity_probes", 200));
    const int curve_steps = static_cast<int>(cfg.get_int("relu", "curve_steps", 50));
    const int top_cfg = static_cast<int>(cfg.get_int("check", "top", -1));
    cfg.check_unused();
    require(tp.loss == "l2" && tp.batch == 0, "relu-pcbias trains full-batch on the l2 loss");
    require(dp.classes == 2, "relu-pcbias needs binary data");

    const std::uint64_t master = cfg.seed();
    const DataBundle data = make_data(dp, master);
    const Matrix& X = data.train.X;
    const Vector y = data.train.signed_labels();
    const SpectralBasis basis = principal_basis(X);
    const int top = top_cfg < 0 ? static_cast<int>(basis.dim()) / 2 : top_cfg;
    const int seeds = tp.ensemble;
    // effective linear rate at PC 1 is mu |a|^2 d_1 / 4
    const double mu = std::isnan(tp.lr) ? 4 * tp.lr_scale / (m * a_scale * a_scale * basis.d(0)) : tp.lr;

    struct SeedOut {
        Relu2Trace trace;
        Vector a;
        double linearity = 0, thm5 = 0;
        std::vector<double> curve;
    };
    std::vector<SeedOut> out(static_cast<std::size_t>(seeds));
    kernels::parallel_for(static_cast<std::size_t>(seeds), [&](std::size_t s) {
        ReLU2Net net = init_relu2(m, static_cast<int>(X.rows()), member_seed(master, s), a_scale);
        SeedOut& o = out[s];
        o.a = net.a;
        // at init f is linear with slope g = sum over pairs a_r w_r
        Vector g = Vector::Zero(X.rows());
        for (int r = 0; r < m; r += 2) g += net.a(r) * net.W.row(r).transpose();
        Rng rng = make_rng(member_seed(master, s), 0x11ea);
        std::normal_distribution<double> nd;
        for (int p = 0; p < probes; ++p) {
            Vector x(X.rows());
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = nd(rng);
            o.linearity = std::max(o.linearity, std::abs(forward_relu2(net, x) - g.dot(x)));
        }
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(X.cols(), probes); ++i)
            o.linearity = std::max(o.linearity, std::abs(forward_relu2(net, Vector(X.col(i))) - g.dot(X.col(i))));
        // predicted vs exact update along the early trajectory
        ReLU2Net probe = net;
        for (int t = 0; t < curve_steps; ++t) {
            const Matrix pred = predicted_update_thm5(probe, X, y, mu);
            const Matrix exact = -mu * relu2_gradient(probe, X, y);
            const double en = exact.norm();
            o.curve.push_back(en > 0 ? (pred - exact).norm() / en : 0.0);
            probe.W += exact;
        }
        o.thm5 = o.curve.empty() ? 0.0 : o.curve[0];
        o.trace = train_relu2(net, X, y, mu, tp.epochs, tp.cadence);
    });

    ExperimentResult res;
    std::vector<std::vector<Matrix>> rotated;
    CsvWriter seeds_t({"seed", "init_linearity_error", "first_step_relative_error"});
    CsvWriter curve_t({"seed", "step", "relative_error"});
    CsvWriter loss_t({"seed", "epoch", "loss"});
    double lin = 0, thm5 = 0;
    for (int s = 0; s < seeds; ++s) {
        const SeedOut& o = out[s];
        if (o.trace.diverged) {
            res.diverged = true;
            res.error = o.trace.error;
        }
        lin = std::max(lin, o.linearity);
        thm5 = std::max(thm5, o.thm5);
        seeds_t.row({cell(s), cell(o.linearity), cell(o.thm5)});
        for (std::size_t t = 0; t < o.curve.size(); ++t) curve_t.row({cell(s), cell(t), cell(o.curve[t])});
        std::vector<Matrix> r;
        for (std::size_t k = 0; k < o.trace.W.size(); ++k) {
            loss_t.row({cell(s), cell(o.trace.epochs[k]), cell(o.trace.loss[k])});
            r.push_back(o.a.transpose() * o.trace.W[k] * basis.U);
        }
        rotated.push_back(std::move(r));
    }
    const std::size_t T = std::min_element(rotated.begin(), rotated.end(), [](const auto& a, const auto& b) {
                              return a.size() < b.size();
                          })->size();
    for (auto& r : rotated) r.resize(T);
    std::vector<int> epochs(out[0].trace.epochs.begin(), out[0].trace.epochs.begin() + static_cast<long>(T));

    // reference: least-squares linear predictor on the +1/-1 targets
    const Matrix Sxx = kernels::omp::gram(X);
    const Matrix wopt = (y.transpose() * X.transpose()) *
                        Sxx.completeOrthogonalDecomposition().pseudoInverse() * basis.U;
    const PcStats st = pc_stats(rotated, epochs, wopt);
    const auto ht = half_times(st);
    add_pc_tables(res, "", st, ht, basis, plots);
    const OrderCheck oc = index_order(ht, top);

    res.files["relu_seeds.csv"] = seeds_t.str();
    res.files["relu_update_error.csv"] = curve_t.str();
    res.files["loss.csv"] = loss_t.str();
    if (plots) {
        Series s{"seed 0", {}, {}};
        for (std::size_t t = 0; t < out[0].curve.size(); ++t) {
            s.x.push_back(static_cast<double>(t));
            s.y.push_back(out[0].curve[t]);
        }
        res.files["relu_update_error.svg"] =
            svg_line_plot({"predicted vs exact update", "step", "relative error", true}, {s});
    }
    res.put("mu", mu);
    res.put("n", static_cast<double>(X.cols()));
    res.put("init_linearity_max_error", lin);
    res.put("first_step_max_relative_error", thm5);
    res.put("top_components", top);
    res.put("spearman", oc.spearman);
    res.put("censored", oc.censored);
    return res;
}

}  // namespace pcbias::exp
