#include "opnorm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "opnorm/error.hpp"
#include "opnorm/format.hpp"

namespace opnorm {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

double parse_real(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError(what + ": '" + text + "' is not a number");
    }
    if (used != t.size() || std::isnan(v)) throw ConfigError(what + ": '" + text + "' is not a number");
    return v;
}

Config Config::parse(std::string_view text) {
    Config cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!valid_name(section)) throw ConfigError("line " + std::to_string(line_no) + ": bad section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (!valid_name(key)) throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
        cfg.set(section.empty() ? key : section + "." + key, trim(std::string_view(line).substr(eq + 1)));
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, std::string value) {
    if (!valid_name(key)) throw ConfigError("bad key '" + key + "'");
    if (value.find('\n') != std::string::npos) throw ConfigError("value of '" + key + "' spans lines");
    entries_[key] = trim(value);
}

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(trim(std::string_view(assignment).substr(0, eq)), assignment.substr(eq + 1));
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& Config::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const { return parse_real(get(key), key); }

double Config::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not an integer");
    }
    if (used != v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
    return out;
}

long long Config::get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get(key))) out.push_back(parse_real(item, key));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(get(key))) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            throw ConfigError(key + ": '" + item + "' is not an integer");
        }
        if (used != item.size() || v < 0) throw ConfigError(key + ": '" + item + "' is not a nonnegative integer");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::string Config::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) {
        if (k.find('.') == std::string::npos) out << k << " = " << v << '\n';
    }
    std::string current;
    for (const auto& [k, v] : entries_) {
        const auto dot = k.find('.');
        if (dot == std::string::npos) continue;
        const std::string section = k.substr(0, dot);
        if (section != current) {
            out << "\n[" << section << "]\n";
            current = section;
        }
        out << k.substr(dot + 1) << " = " << v << '\n';
    }
    return out.str();
}

std::string Config::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : serialize()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace opnorm
