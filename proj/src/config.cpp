#include "semcom/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semcom::cfg {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

Config Config::parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + " has no '=': " + t);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return Config(std::move(kv));
}

void Config::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write config file: " + path);
    os << serialize();
}

std::string Config::serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
    return os.str();
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
}

long Config::get_int(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        return std::stol(it->second);
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "' is not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "' is not a number: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::runtime_error("config key '" + key + "' is not a boolean: " + v);
}

}  // namespace semcom::cfg
