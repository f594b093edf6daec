#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace pcbias {

// Experiment config: a YAML mapping with top-level scalars (kind, seed) and
// one level of sections, e.g.
//
//   kind: thm3-check
//   seed: 7
//   data:
//     q: 20
//     profile: geometric:10
//
// Every key must be read by the experiment; leftovers are reported with
// their line number by check_unused().
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    std::string kind() const;
    std::uint64_t seed() const;

    bool has(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double def) const;
    long long get_int(const std::string& section, const std::string& key, long long def) const;
    bool get_bool(const std::string& section, const std::string& key, bool def) const;
    std::string get_string(const std::string& section, const std::string& key, const std::string& def) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    const std::vector<double>& def) const;
    std::vector<int> get_ints(const std::string& section, const std::string& key, const std::vector<int>& def) const;

    // overrides (CLI --seed, tests); section "" is the top level
    void set(const std::string& section, const std::string& key, const std::string& value);

    void check_unused() const;

    // the parsed document re-emitted (for the run record)
    std::string dump() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

}  // namespace pcbias
