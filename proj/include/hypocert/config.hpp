#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypocert {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Plain-text key=value configuration with [section] headers and # comments.
// Keys are stored section-qualified as "section.key"; keys before any
// section header keep their bare name.
class Config {
public:
    static Config load(const std::string& path);
    static Config from_string(const std::string& text, const std::string& origin = "<string>");

    // KEY=VALUE with KEY already section-qualified (CLI --set).
    void set_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_reals(const std::string& key,
                                  const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& items() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// "1,2.5,-3" -> {1.0, 2.5, -3.0}; throws ConfigError on junk.
std::vector<double> parse_reals(const std::string& text);

} // namespace hypocert
