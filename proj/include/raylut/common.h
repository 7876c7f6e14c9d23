#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace raylut {

enum class Metric { L2, InnerProduct };

inline std::string_view metric_name(Metric m) {
    return m == Metric::L2 ? "l2" : "ip";
}

Metric parse_metric(std::string_view s);

/// Lower score is better for L2, higher is better for inner product.
inline bool better(Metric m, double a, double b) {
    return m == Metric::L2 ? a < b : a > b;
}

/// Raised for malformed files and bundles.
class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Raised for configuration problems; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

using idx_t = std::int64_t;

} // namespace raylut
