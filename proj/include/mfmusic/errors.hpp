#ifndef MFMUSIC_ERRORS_HPP
#define MFMUSIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mfmusic {

// Base class for all library failures. Data-level problems (invalid
// configurations) are reported through ValidationReport instead and never
// throw; exceptions are reserved for contract violations and I/O.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& w) : Error("DimensionMismatch: " + w) {}
};

class MissingShape : public Error {
public:
    explicit MissingShape(const std::string& w) : Error("MissingShape: " + w) {}
};

class InsufficientDirections : public Error {
public:
    explicit InsufficientDirections(const std::string& w) : Error("InsufficientDirections: " + w) {}
};

class ConvergenceFailure : public Error {
public:
    explicit ConvergenceFailure(const std::string& w) : Error("ConvergenceFailure: " + w) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& w) : Error("ConfigError: " + w) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& w) : Error("IoError: " + w) {}
};

} // namespace mfmusic

#endif
