#include "support.hpp"

#include <sstream>

namespace pcbias {

std::string trace_to_csv(const TrainTrace& trace) {
    require(!trace.snapshots.empty() && trace.snapshots[0].compact.size() > 0,
            "trace_to_csv: trace has no compact representations");
    const Eigen::Index K = trace.snapshots[0].compact.rows(), q = trace.snapshots[0].compact.cols();
    std::vector<std::string> header{"epoch", "loss"};
    for (Eigen::Index c = 0; c < K; ++c)
        for (Eigen::Index j = 0; j < q; ++j) header.push_back("w" + std::to_string(c) + "_" + std::to_string(j));
    CsvWriter w(header);
    for (const auto& s : trace.snapshots) {
        std::vector<std::string> row{cell(s.epoch), cell(s.loss)};
        for (Eigen::Index c = 0; c < K; ++c)
            for (Eigen::Index j = 0; j < q; ++j) row.push_back(cell(s.compact(c, j)));
        w.row(std::move(row));
    }
    return w.str();
}

CompactTrace trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("trace: missing header");
    const auto head = split_csv_line(line);
    if (head.size() < 3 || head[0] != "epoch" || head[1] != "loss")
        throw ParseError("trace: header must start with epoch,loss");
    // last column is w<K-1>_<q-1>
    const std::string last(head.back());
    const auto us = last.find('_');
    if (last.size() < 4 || last[0] != 'w' || us == std::string::npos) throw ParseError("trace: bad weight column '" + last + "'");
    const long long K = parse_int(std::string_view(last).substr(1, us - 1)) + 1;
    const long long q = parse_int(std::string_view(last).substr(us + 1)) + 1;
    if (K * q + 2 != static_cast<long long>(head.size())) throw ParseError("trace: header column count mismatch");
    CompactTrace t;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != head.size())
            throw ParseError("trace line " + std::to_string(lineno) + ": expected " + std::to_string(head.size()) +
                             " cells");
        t.epochs.push_back(static_cast<int>(parse_int(cells[0])));
        t.loss.push_back(parse_double(cells[1]));
        Matrix W(K, q);
        for (long long c = 0; c < K; ++c)
            for (long long j = 0; j < q; ++j) W(c, j) = parse_double(cells[2 + c * q + j]);
        t.compact.push_back(std::move(W));
    }
    return t;
}

ExperimentResult report_traces(const std::vector<CompactTrace>& traces, const Dataset& train, bool plots) {
    require(!traces.empty(), "report: no traces");
    const auto& ref = traces[0];
    require(!ref.compact.empty(), "report: empty trace");
    for (const auto& t : traces) {
        require_dims(t.epochs == ref.epochs, "report: traces have different snapshot epochs");
        for (const auto& W : t.compact)
            require_dims(W.rows() == train.K && W.cols() == train.q(), "report: trace shape does not match the data");
    }
    const SpectralBasis basis = principal_basis(train.X);
    std::vector<std::vector<Matrix>> rotated;
    for (const auto& t : traces) {
        std::vector<Matrix> r;
        for (const auto& W : t.compact) r.push_back(W * basis.U);
        rotated.push_back(std::move(r));
    }
    const exp::PcStats st = exp::pc_stats(rotated, ref.epochs, optimal_solution(train) * basis.U);
    const auto ht = exp::half_times(st);
    ExperimentResult res;
    res.kind = "report";
    exp::add_pc_tables(res, "", st, ht, basis, plots);
    res.put("members", static_cast<double>(traces.size()));
    res.put("snapshots", static_cast<double>(ref.epochs.size()));
    if (basis.dim() >= 6) {
        const auto oc = exp::index_order(ht, static_cast<int>(basis.dim()) / 2);
        res.put("spearman", oc.spearman);
        res.put("censored", oc.censored);
    }
    return res;
}

}  // namespace pcbias
