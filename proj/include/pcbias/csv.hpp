#pragma once

#include <string>
#include <type_traits>
#include <string_view>
#include <vector>

namespace pcbias {

// shortest decimal that round-trips to the same double
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split_csv_line(std::string_view line);

// Minimal table writer: header then rows of already-formatted cells.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row(std::vector<std::string> cells);
    std::string str() const;
    void save(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

template <class T>
std::string cell(T v) {
    if constexpr (std::is_floating_point_v<T>)
        return format_double(static_cast<double>(v));
    else if constexpr (std::is_integral_v<T>)
        return std::to_string(v);
    else
        return std::string(v);
}

}  // namespace pcbias
