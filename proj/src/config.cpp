#include "pcbias/config.hpp"

#include "pcbias/common.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <optional>
#include <sstream>

namespace pcbias {

struct Config::Impl {
    YAML::Node root;
    mutable std::set<std::string> used;
};

namespace {

std::string where(const YAML::Node& n) { return "line " + std::to_string(n.Mark().line + 1); }

std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

}  // namespace

Config Config::from_string(const std::string& text) {
    Config c;
    c.impl_ = std::make_shared<Impl>();
    try {
        c.impl_->root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParseError("config line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (c.impl_->root.IsNull()) c.impl_->root = YAML::Node(YAML::NodeType::Map);
    if (!c.impl_->root.IsMap()) throw ParseError("config: top level must be a key/value mapping");
    for (auto it = c.impl_->root.begin(); it != c.impl_->root.end(); ++it) {
        const auto& v = it->second;
        if (v.IsMap()) {
            for (auto jt = v.begin(); jt != v.end(); ++jt)
                if (!jt->second.IsScalar() && !jt->second.IsSequence())
                    throw ParseError("config " + where(jt->first) + ": sections cannot nest ('" +
                                     jt->first.as<std::string>() + "')");
        } else if (!v.IsScalar()) {
            throw ParseError("config " + where(it->first) + ": '" + it->first.as<std::string>() +
                             "' must be a scalar or a section");
        }
    }
    return c;
}

Config Config::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

namespace {

std::optional<YAML::Node> lookup(const YAML::Node& root, const std::string& section, const std::string& key) {
    const YAML::Node& r = root;
    if (section.empty()) {
        const YAML::Node n = r[key];
        if (!n.IsDefined() || n.IsMap()) return std::nullopt;
        return n;
    }
    const YAML::Node s = r[section];
    if (!s.IsDefined() || !s.IsMap()) return std::nullopt;
    const YAML::Node n = s[key];
    if (!n.IsDefined()) return std::nullopt;
    return n;
}

template <class T>
T convert(const YAML::Node& n, const std::string& name, const char* what) {
    try {
        if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError("config " + where(n) + ": '" + name + "' expects " + what);
    }
}

}  // namespace

bool Config::has(const std::string& section, const std::string& key) const {
    return lookup(impl_->root, section, key).has_value();
}

#define PCBIAS_GETTER(NAME, T, WHAT)                                                               \
    T Config::NAME(const std::string& section, const std::string& key, T def) const {              \
        auto n = lookup(impl_->root, section, key);                                                \
        impl_->used.insert(qualified(section, key));                                               \
        return n ? convert<T>(*n, qualified(section, key), WHAT) : def;                            \
    }

PCBIAS_GETTER(get_double, double, "a number")
PCBIAS_GETTER(get_int, long long, "an integer")
PCBIAS_GETTER(get_bool, bool, "true or false")
#undef PCBIAS_GETTER

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& def) const {
    auto n = lookup(impl_->root, section, key);
    impl_->used.insert(qualified(section, key));
    return n ? convert<std::string>(*n, qualified(section, key), "a string") : def;
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& def) const {
    auto n = lookup(impl_->root, section, key);
    impl_->used.insert(qualified(section, key));
    if (!n) return def;
    if (!n->IsSequence()) throw ParseError("config " + where(*n) + ": '" + qualified(section, key) + "' expects a list");
    std::vector<double> out;
    for (const auto& e : *n) out.push_back(convert<double>(e, qualified(section, key), "a list of numbers"));
    return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& key,
                                  const std::vector<int>& def) const {
    auto n = lookup(impl_->root, section, key);
    impl_->used.insert(qualified(section, key));
    if (!n) return def;
    if (!n->IsSequence()) throw ParseError("config " + where(*n) + ": '" + qualified(section, key) + "' expects a list");
    std::vector<int> out;
    for (const auto& e : *n) out.push_back(convert<int>(e, qualified(section, key), "a list of integers"));
    return out;
}

std::string Config::kind() const { return get_string("", "kind", ""); }

std::uint64_t Config::seed() const {
    auto n = lookup(impl_->root, "", "seed");
    impl_->used.insert("seed");
    return n ? convert<std::uint64_t>(*n, "seed", "a non-negative integer") : 0;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    // re-parse the value so "3" becomes a number and "[1, 2]" a list
    YAML::Node v = YAML::Load(value);
    if (section.empty()) {
        impl_->root[key] = v;
    } else {
        impl_->root[section][key] = v;
    }
}

void Config::check_unused() const {
    for (auto it = impl_->root.begin(); it != impl_->root.end(); ++it) {
        const std::string name = it->first.as<std::string>();
        if (it->second.IsMap()) {
            for (auto jt = it->second.begin(); jt != it->second.end(); ++jt) {
                const std::string key = jt->first.as<std::string>();
                if (!impl_->used.count(qualified(name, key)))
                    throw ParseError("config " + where(jt->first) + ": unknown key '" + key + "' in section '" +
                                     name + "'");
            }
        } else if (name != "kind" && name != "seed" && !impl_->used.count(name)) {
            throw ParseError("config " + where(it->first) + ": unknown key '" + name + "'");
        }
    }
}

std::string Config::dump() const { return YAML::Dump(impl_->root) + "\n"; }

}  // namespace pcbias
