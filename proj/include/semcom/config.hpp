#pragma once

// Flat key=value configuration files. Lines starting with '#' and blank
// lines are ignored; values keep everything after the first '='.

#include <map>
#include <string>

namespace semcom::cfg {

class Config {
public:
    Config() = default;
    explicit Config(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    static Config load(const std::string& path);
    static Config parse(const std::string& text);
    void save(const std::string& path) const;
    std::string serialize() const;

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::string require_str(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace semcom::cfg
