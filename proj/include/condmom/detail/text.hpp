#pragma once

#include <charconv>
#include <string>

namespace condmom::detail {

// Shortest round-trip rendering; -0 collapses to 0 so renderings usable as
// equality keys behave like the values they encode.
inline std::string render_double(double v) {
    if (v == 0.0)
        v = 0.0;
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

} // namespace condmom::detail
