#pragma once

#include <stdexcept>
#include <string>

namespace fcp {

// Error taxonomy shared by all modules. Everything derives from FcpError so
// callers (and the CLI) can distinguish data problems from usage problems.
struct FcpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FileMissing : FcpError {
    explicit FileMissing(const std::string& path)
        : FcpError("file missing: " + path) {}
};

struct ParseError : FcpError {
    using FcpError::FcpError;
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : FcpError(file + ":" + std::to_string(line) + ": " + what) {}
};

struct ShapeError : FcpError {
    using FcpError::FcpError;
};

struct ConfigError : FcpError {
    using FcpError::FcpError;
};

struct DegenerateLabels : FcpError {
    using FcpError::FcpError;
};

struct StratifyError : FcpError {
    using FcpError::FcpError;
};

struct LabelError : FcpError {
    using FcpError::FcpError;
};

struct VersionError : FcpError {
    using FcpError::FcpError;
};

struct NonFiniteLoss : FcpError {
    using FcpError::FcpError;
};

struct ModelMissing : FcpError {
    using FcpError::FcpError;
};

struct NonStochasticRows : FcpError {
    using FcpError::FcpError;
};

}  // namespace fcp
