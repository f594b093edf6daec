#include "runners.hpp"

#include "pcbias/common.hpp"

#include <algorithm>
#include <functional>
#include <utility>

namespace pcbias {

namespace {

using Runner = std::function<ExperimentResult(const Config&, bool)>;

const std::vector<std::pair<std::string, Runner>>& table() {
    static const std::vector<std::pair<std::string, Runner>> t{
        {"pc-convergence", exp::run_pc_convergence},
        {"whitening-control", exp::run_whitening_control},
        {"thm3-check", exp::run_thm3_check},
        {"thm4-check", exp::run_thm4_check},
        {"randmat-verify", exp::run_randmat_verify},
        {"relu-pcbias", exp::run_relu_pcbias},
        {"projection-eval", exp::run_projection_eval},
        {"amplify-earlystop", exp::run_amplify_earlystop},
        {"random-labels", exp::run_random_labels},
        {"loc-correlation", exp::run_loc_correlation},
        {"frequency-bias", exp::run_frequency_bias},
    };
    return t;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> v;
        for (const auto& e : table()) v.push_back(e.first);
        return v;
    }();
    return k;
}

bool is_experiment_kind(const std::string& kind) {
    const auto& k = experiment_kinds();
    return std::find(k.begin(), k.end(), kind) != k.end();
}

ExperimentResult run_experiment(const Config& cfg, bool plots) {
    const std::string kind = cfg.kind();
    for (const auto& [name, run] : table())
        if (name == kind) {
            ExperimentResult r = run(cfg, plots);
            r.kind = kind;
            return r;
        }
    throw ValidationError("unknown experiment kind '" + kind + "'");
}

}  // namespace pcbias
