#pragma once

// Flat run configuration:
//
//   # comment
//   seed = 7
//   [lr-transfer]
//   widths = 64, 256, 1024
//
// Keys inside a section are stored as "section.key". Overrides use the same
// dotted form ("lr-transfer.steps=50") and replace file values.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace opnorm {

class Config {
  public:
    static Config parse(std::string_view text);
    static Config load(const std::string& path);

    void set(const std::string& key, std::string value);
    /// "key=value"; throws ConfigError without '='.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const;
    /// Throws ConfigError naming the key when it is absent.
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;

    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::size_t> get_sizes(const std::string& key) const;

    /// Canonical text: top-level keys first, then sections in key order.
    std::string serialize() const;
    /// FNV-1a 64 of serialize(), as 16 hex digits.
    std::string hash() const;

    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    friend bool operator==(const Config&, const Config&) = default;

  private:
    std::map<std::string, std::string> entries_;
};

/// Parses a real, accepting "inf".
double parse_real(const std::string& text, const std::string& what);

}  // namespace opnorm
