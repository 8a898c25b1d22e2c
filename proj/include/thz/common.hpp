#ifndef THZ_COMMON_HPP
#define THZ_COMMON_HPP

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace thz {

// speed of light, m/s
inline constexpr double kSpeedOfLight = 2.99792458e8;

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Shortest-round-trip-safe decimal formatting; stable across
// write -> read -> write cycles.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        pos = eol + 1;
    }
    return out;
}

inline double parse_double(std::string_view field, const std::string& where) {
    std::string s(field);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    while (end && *end == ' ') ++end;
    if (end == s.c_str() || (end && *end != '\0'))
        throw parse_error("non-numeric field '" + s + "' in " + where);
    return v;
}

}  // namespace detail
}  // namespace thz

#endif
