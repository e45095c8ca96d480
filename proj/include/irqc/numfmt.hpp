#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>

namespace irqc {

// Canonical decimal rendering used by every text format we emit.
// Integral values print without a fraction; everything else uses the
// shortest round-trip form. Deterministic, so file output is byte-stable.
inline std::string format_number(double value) {
    if (std::nearbyint(value) == value && std::abs(value) < 1e15) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<std::int64_t>(value));
        return std::string(buf, res.ptr);
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace irqc
