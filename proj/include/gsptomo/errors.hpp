// errors.hpp: error kinds raised across the library

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gsptomo {

enum class ErrorCode {
    Domain,
    IntegrationFailure,
    InvariantBreach,
    DegenerateCovariance,
    DegenerateLine,
    NoCommonRoot,
    InvalidDensity,
    NoBracket,
    MultipleRoots,
    QuadratureFailure,
    DivisionNearZero,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by the two-curve intersection when g changes sign more than once and
// no held-out measurement is available to pick one.
class MultipleRootsError : public Error {
public:
    MultipleRootsError(const std::string& what, std::vector<double> candidates)
        : Error(ErrorCode::MultipleRoots, what), candidates_(std::move(candidates)) {}

    const std::vector<double>& candidates() const noexcept { return candidates_; }

private:
    std::vector<double> candidates_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace gsptomo
