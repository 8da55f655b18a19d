#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace cklur {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Ordered key=value lines for the machine-readable CLI output.
class Report {
public:
    void add(const std::string& key, std::string value) {
        rows_.emplace_back(key, std::move(value));
    }
    void add(const std::string& key, const char* value) { add(key, std::string(value)); }
    void add(const std::string& key, double value) { add(key, format_g17(value)); }
    void add(const std::string& key, long long value) { add(key, std::to_string(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

    std::string str() const {
        std::string out;
        for (const auto& [k, v] : rows_) {
            out += k;
            out += '=';
            out += v;
            out += '\n';
        }
        return out;
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

}  // namespace cklur
