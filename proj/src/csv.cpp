#include "pcbias/csv.hpp"

#include "pcbias/common.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pcbias {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("not a number: '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("not an integer: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

CsvWriter& CsvWriter::row(std::vector<std::string> cells) {
    require_dims(cells.size() == header_.size(), "csv: row width does not match header");
    rows_.push_back(std::move(cells));
    return *this;
}

std::string CsvWriter::str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
}

void CsvWriter::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << str();
}

}  // namespace pcbias
