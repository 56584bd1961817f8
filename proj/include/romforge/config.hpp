#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "romforge/errors.hpp"

namespace romforge {

/// Flat key=value configuration. Lines starting with '#' are comments; keys
/// are namespaced with dots (fe.delta, fv.nu, study.branch, ...).
class Config {
  public:
    Config() = default;

    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, int value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated doubles.
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& items() const { return kv_; }
    /// Canonical "key=value" lines, sorted by key; backs the config hash.
    std::string canonical_text() const;

  private:
    std::map<std::string, std::string> kv_;
};

}  // namespace romforge
