#include "romforge/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace romforge {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
    try {
        size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "bad numeric value for " + key + ": '" + raw + "'");
    }
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::InvalidConfig, "cannot open config file: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidConfig,
                        "config line " + std::to_string(lineno) + " is not key=value: " + t);
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw Error(ErrorCode::InvalidConfig,
                        "empty key on config line " + std::to_string(lineno));
        cfg.kv_[key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

void Config::set(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    kv_[key] = os.str();
}

void Config::set(const std::string& key, int value) { kv_[key] = std::to_string(value); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw Error(ErrorCode::InvalidConfig, "missing config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const double v = parse_double(key, it->second);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw Error(ErrorCode::InvalidConfig, "expected integer for " + key + ": " + it->second);
    return i;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::InvalidConfig, "expected boolean for " + key + ": " + v);
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_double(key, trim(tok)));
    return out;
}

std::string Config::canonical_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
    return os.str();
}

}  // namespace romforge
