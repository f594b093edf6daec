#pragma once

#include "pcbias/config.hpp"
#include "pcbias/experiments.hpp"

namespace pcbias::exp {

ExperimentResult run_pc_convergence(const Config& cfg, bool plots);
ExperimentResult run_whitening_control(const Config& cfg, bool plots);
ExperimentResult run_thm3_check(const Config& cfg, bool plots);
ExperimentResult run_thm4_check(const Config& cfg, bool plots);
ExperimentResult run_randmat_verify(const Config& cfg, bool plots);
ExperimentResult run_relu_pcbias(const Config& cfg, bool plots);
ExperimentResult run_projection_eval(const Config& cfg, bool plots);
ExperimentResult run_amplify_earlystop(const Config& cfg, bool plots);
ExperimentResult run_random_labels(const Config& cfg, bool plots);
ExperimentResult run_loc_correlation(const Config& cfg, bool plots);
ExperimentResult run_frequency_bias(const Config& cfg, bool plots);

}  // namespace pcbias::exp
