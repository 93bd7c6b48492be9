#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the dataset, checkpoint and report writers.
// Doubles are rendered with std::to_chars (shortest form that parses back to
// the identical 64-bit value), so every file round-trips exactly.
namespace ltv::text {

inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad decimal value '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer value '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad unsigned value '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

// Splits on single spaces; consecutive separators yield no empty tokens.
inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

// "key=value" -> {key, value}; value may be empty.
inline std::pair<std::string_view, std::string_view> split_kv(std::string_view token) {
    const std::size_t pos = token.find('=');
    if (pos == std::string_view::npos)
        throw std::invalid_argument("expected key=value, got '" + std::string(token) + "'");
    return {token.substr(0, pos), token.substr(pos + 1)};
}

}  // namespace ltv::text
