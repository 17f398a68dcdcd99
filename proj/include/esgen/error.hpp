#pragma once

#include <stdexcept>
#include <string>

namespace esgen {

enum class ErrorKind {
    config,        // unknown names, invalid parameters, malformed scenario files
    input,         // data handed to a check does not meet its preconditions
    precondition,  // a theorem hypothesis does not hold for the supplied constants
    domain,        // argument outside the region where a quantity is defined
    numeric,       // non-finite values, quadrature failure
    model,         // cost value below the declared minimum
    divergence,    // integrated state became non-finite
    escape,        // integrated state left the domain box
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::input, w) {}
};
struct PreconditionError : Error {
    explicit PreconditionError(const std::string& w) : Error(ErrorKind::precondition, w) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct ModelError : Error {
    explicit ModelError(const std::string& w) : Error(ErrorKind::model, w) {}
};

/// Integration produced a non-finite state; `last_time` is the last time with a finite state.
struct DivergenceError : Error {
    DivergenceError(const std::string& w, double last_time)
        : Error(ErrorKind::divergence, w), last_time(last_time) {}
    double last_time;
};

/// Integration left the domain box at `exit_time`.
struct EscapeError : Error {
    EscapeError(const std::string& w, double exit_time)
        : Error(ErrorKind::escape, w), exit_time(exit_time) {}
    double exit_time;
};

/// Process exit codes of the command-line tool.
namespace exit_status {
inline constexpr int pass = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int numeric_failure = 3;
}  // namespace exit_status

[[nodiscard]] constexpr int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::input:
        case ErrorKind::precondition:
            return exit_status::config_error;
        default:
            return exit_status::numeric_failure;
    }
}

}  // namespace esgen
