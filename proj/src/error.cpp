#include <rotordiag/error.hpp>

namespace rotordiag {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument: return "invalid argument";
    case Errc::ShapeMismatch: return "shape mismatch";
    case Errc::InsufficientSamples: return "insufficient samples";
    case Errc::FileNotFound: return "file not found";
    case Errc::Io: return "i/o error";
    case Errc::Malformed: return "malformed file";
    case Errc::Unsupported: return "unsupported format";
    case Errc::Truncated: return "truncated file";
    case Errc::BadMagic: return "bad magic";
    case Errc::VersionMismatch: return "version mismatch";
    case Errc::Divergence: return "training diverged";
    }
    return "unknown error";
}

} // namespace rotordiag
