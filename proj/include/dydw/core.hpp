#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dydw {

/// Raised when an operation is called outside its documented domain.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a requested computation exceeds a configured resource budget.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

/// A point of the even space-time lattice {(x, t) : x + t even}.
struct Site {
    std::int64_t x = 0;
    std::int64_t t = 0;

    [[nodiscard]] constexpr bool is_even() const noexcept { return ((x + t) & 1) == 0; }
    friend constexpr bool operator==(const Site&, const Site&) = default;
};

struct SiteHash {
    std::size_t operator()(const Site& z) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(z.x) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(z.t) + 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
        h ^= h >> 31;
        return static_cast<std::size_t>(h);
    }
};

/// Wide integers for box coordinates, which overflow 64 bits for large k.
using wide_int = __int128;

std::string to_string(wide_int v);

}  // namespace dydw
