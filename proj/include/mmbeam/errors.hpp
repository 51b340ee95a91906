#pragma once

#include <stdexcept>
#include <string>

namespace mmbeam {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonPositiveCoefficient : Error {
    explicit NonPositiveCoefficient(const std::string& what_failed)
        : Error("NonPositiveCoefficient: " + what_failed) {}
};

struct MissingCoefficient : Error {
    explicit MissingCoefficient(const std::string& name)
        : Error("MissingCoefficient: " + name) {}
};

struct ResolutionTooSmall : Error {
    explicit ResolutionTooSmall(int n)
        : Error("ResolutionTooSmall: n = " + std::to_string(n) + ", need n >= 8") {}
};

struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& msg) : Error("IndexOutOfRange: " + msg) {}
};

struct SolverSingular : Error {
    explicit SolverSingular(const std::string& msg) : Error("SolverSingular: " + msg) {}
};

struct SingularMass : Error {
    explicit SingularMass(const std::string& msg) : Error("SingularMass: " + msg) {}
};

struct NonConvergence : Error {
    explicit NonConvergence(const std::string& msg) : Error("NonConvergence: " + msg) {}
};

struct StabilityViolation : Error {
    explicit StabilityViolation(const std::string& msg) : Error("StabilityViolation: " + msg) {}
};

struct WindowTooShort : Error {
    explicit WindowTooShort(const std::string& msg) : Error("WindowTooShort: " + msg) {}
};

struct NonPositiveEnergy : Error {
    explicit NonPositiveEnergy(const std::string& msg) : Error("NonPositiveEnergy: " + msg) {}
};

struct EigensolverFailure : Error {
    explicit EigensolverFailure(const std::string& msg) : Error("EigensolverFailure: " + msg) {}
};

struct ParseError : Error {
    ParseError(int line, const std::string& msg)
        : Error("ParseError: line " + std::to_string(line) + ": " + msg) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error("ValidationError: " + msg) {}
};

} // namespace mmbeam
