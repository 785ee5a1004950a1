#pragma once

#include <stdexcept>
#include <string>

namespace cvarrl {

/**
 * Error taxonomy. ConfigError covers bad inputs and usage mistakes and maps
 * to CLI exit code 2; NumericError covers violated numerical invariants and
 * maps to exit code 3.
 */
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidTau : ConfigError {
    explicit InvalidTau(const std::string& msg) : ConfigError(msg) {}
};

struct EmptySamples : ConfigError {
    explicit EmptySamples(const std::string& msg) : ConfigError(msg) {}
};

struct EmptyDataset : ConfigError {
    explicit EmptyDataset(const std::string& msg) : ConfigError(msg) {}
};

struct DimensionMismatch : ConfigError {
    explicit DimensionMismatch(const std::string& msg) : ConfigError(msg) {}
};

struct GridMismatch : ConfigError {
    explicit GridMismatch(const std::string& msg) : ConfigError(msg) {}
};

struct InstanceTooLarge : ConfigError {
    explicit InstanceTooLarge(const std::string& msg) : ConfigError(msg) {}
};

struct ConfigInvalid : ConfigError {
    explicit ConfigInvalid(const std::string& msg) : ConfigError(msg) {}
};

struct InvalidModel : NumericError {
    explicit InvalidModel(const std::string& msg) : NumericError(msg) {}
};

struct SingularMatrix : NumericError {
    explicit SingularMatrix(const std::string& msg) : NumericError(msg) {}
};

} // namespace cvarrl
