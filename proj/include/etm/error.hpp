#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etm {

enum class ErrorKind {
    QuadratureFailure,
    DivergentValuation,
    ZeroMevMarket,
    InvalidPartition,
    MissingPbsConfig,
    InvalidHoldings,
    InsufficientData,
    ParseError,
    SchemaError,
    ValidationError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Message without the kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

} // namespace etm
