#pragma once

#include <stdexcept>
#include <string>

namespace threehalves {

enum class ErrorKind {
    invalid_argument,
    domain,
    pole,
    non_convergence,
    overflow,
    precision_loss,
    contour,
    terminal_regime,
    constraint,
};

const char* to_string(ErrorKind kind) noexcept;

// Every numerical failure in the library surfaces as one of these. `where`
// names the module and operation so the CLI can render provenance.
class NumericError : public std::runtime_error {
public:
    NumericError(ErrorKind kind, std::string where, const std::string& message)
        : std::runtime_error(where + ": " + message), kind_(kind), where_(std::move(where)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& where() const noexcept { return where_; }

private:
    ErrorKind kind_;
    std::string where_;
};

[[noreturn]] inline void fail(ErrorKind kind, const char* where, const std::string& message) {
    throw NumericError(kind, where, message);
}

}  // namespace threehalves
