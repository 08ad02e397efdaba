#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace genmix {

// Invalid sizes, widths, hyperparameters, malformed run configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values produced where finite ones are required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: stale tapes, empty subsets, calls out of sequence.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files: CSV, parameter blobs, config JSON.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mathematical domain violations (e.g. undefined divergence for a zero pattern).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr double kTwoPi = 6.283185307179586476925286766559;

// FNV-1a, used to fingerprint configs and datasets in run manifests.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace genmix
