#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdl {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside its admissible range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Input samples or tabulated data are unusable (empty, non-finite).
class DataError : public Error {
public:
    using Error::Error;
};

/// A measurement cannot be taken on the supplied window.
class MeasurementError : public Error {
public:
    using Error::Error;
};

/// A caller broke an element's per-sample contract (e.g. control outside [0,1]).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Tabulated data does not cover the band an operation needs.
class CoverageError : public Error {
public:
    using Error::Error;
};

/// Analysis window too short to resolve the requested lines.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class QuantizationError : public Error {
public:
    QuantizationError(const std::string& what, double achievable_period)
        : Error(what), achievable_period_(achievable_period) {}

    /// Nearest period whose sample count is a multiple of four.
    double achievable_period() const noexcept { return achievable_period_; }

private:
    double achievable_period_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Configuration problems. Carries every violation found, not only the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v)
    {
        std::string out = "configuration error";
        for (const auto& s : v)
            out += "\n  - " + s;
        return out;
    }

    std::vector<std::string> violations_;
};

/// A NaN or Inf appeared in the simulated wave field.
class NumericalFault : public Error {
public:
    NumericalFault(const std::string& what, std::int64_t sample)
        : Error(what + " at sample " + std::to_string(sample)), sample_(sample) {}

    std::int64_t sample() const noexcept { return sample_; }

private:
    std::int64_t sample_;
};

} // namespace sdl
