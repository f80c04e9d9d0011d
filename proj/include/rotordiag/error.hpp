#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rotordiag {

/// Failure categories shared by every module. Each maps to exactly one CLI
/// exit code (see tools/rotordiag.cpp).
enum class Errc {
    InvalidArgument,     // precondition on a caller-supplied value
    ShapeMismatch,       // tensor / model shape composition
    InsufficientSamples, // dataset too small for a split
    FileNotFound,
    Io,                  // open/read/write failure other than "missing"
    Malformed,           // container or header does not parse
    Unsupported,         // parses, but encoding is outside what we handle
    Truncated,
    BadMagic,
    VersionMismatch,
    Divergence,          // non-finite loss during training
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond)
        throw Error(code, what);
}

} // namespace rotordiag
