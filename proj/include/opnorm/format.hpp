#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace opnorm {

/// 17 significant digits, enough for an exact double round trip.
/// Infinities print as "inf" / "-inf", NaN as "nan".
inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace opnorm
