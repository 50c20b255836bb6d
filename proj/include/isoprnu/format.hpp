#pragma once

#include <cstdio>
#include <string>

namespace isoprnu {

/// Fixed significant-digit rendering, printf "%.Ng".
inline std::string format_sig(double v, int digits = 9) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace isoprnu
