#include "errors.hpp"

namespace threehalves {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::pole: return "pole";
        case ErrorKind::non_convergence: return "non-convergence";
        case ErrorKind::overflow: return "overflow";
        case ErrorKind::precision_loss: return "precision loss";
        case ErrorKind::contour: return "contour violation";
        case ErrorKind::terminal_regime: return "terminal (delta) regime";
        case ErrorKind::constraint: return "constraint violation";
    }
    return "unknown";
}

}  // namespace threehalves
