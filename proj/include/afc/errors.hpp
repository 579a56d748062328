// Exception types thrown by the afcmem library.
#pragma once

#include <stdexcept>
#include <string>

namespace afc {

/// Base of every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside its physical domain (negative depth, zero width...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Comb finesse Δ/γ is not above one; teeth would merge into a flat band.
class LowFinesseError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Simulation grid does not cover the comb bandwidth or the echo time.
class GridCoverageError : public Error {
public:
    using Error::Error;
};

/// Echo integration window is empty or overlaps the transmitted pulse.
class WindowError : public Error {
public:
    using Error::Error;
};

/// Trace has no structure to fit.
class FlatTraceError : public Error {
public:
    using Error::Error;
};

/// Too few samples / teeth / points for the requested fit.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Decay series does not decay.
class NonDecayingError : public Error {
public:
    using Error::Error;
};

/// Three-level efficiency above the two-level one.
class UnphysicalEfficiencyError : public Error {
public:
    using Error::Error;
};

/// Configuration document is malformed; `field()` names the offending path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Sweep parameter path does not resolve to a numeric config field.
class UnknownPathError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV input.
class CsvError : public Error {
public:
    using Error::Error;
};

}  // namespace afc
