#ifndef CAUSAL_TEXT_HPP
#define CAUSAL_TEXT_HPP

#include <charconv>
#include <string>

namespace causal {

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace causal

#endif
