#pragma once

#include "pcbias/config.hpp"
#include "pcbias/dataset.hpp"
#include "pcbias/linnet.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pcbias {

struct ExperimentResult {
    std::string kind;
    std::vector<std::pair<std::string, double>> summary;  // in insertion order
    std::map<std::string, std::string> files;             // name -> contents (csv tables, svg plots)
    std::map<std::string, Dataset> datasets;              // name -> data, written as raw-f64
    bool diverged = false;
    std::string error;

    void put(const std::string& name, double value);
    bool has(const std::string& name) const;
    double at(const std::string& name) const;

    // writes every file plus summary.csv into dir (created if missing)
    void write(const std::string& dir) const;
    std::string summary_csv() const;
};

const std::vector<std::string>& experiment_kinds();
bool is_experiment_kind(const std::string& kind);

// Runs the experiment named by cfg.kind(). All keys are read and checked
// (ParseError on unknown keys) before any computation starts.
ExperimentResult run_experiment(const Config& cfg, bool plots = false);

// One ensemble member's compact representations, as saved by pc-convergence
// with output.traces set. CSV columns: epoch, loss, w<c>_<j> (class c, input j).
struct CompactTrace {
    std::vector<int> epochs;
    std::vector<double> loss;
    std::vector<Matrix> compact;
};

std::string trace_to_csv(const TrainTrace& trace);
CompactTrace trace_from_csv(const std::string& text);

// Per-PC cross-member std and mean distance to the least-squares optimum of
// `train`, per snapshot. Traces must share their epochs and shapes.
ExperimentResult report_traces(const std::vector<CompactTrace>& traces, const Dataset& train, bool plots = false);

}  // namespace pcbias
