#pragma once

#include <stdexcept>
#include <string>

namespace sitqc {

// Error classes double as CLI exit codes (0 = success, 1 = unexpected).
enum class ErrorClass : int {
    config = 2,       // bad flags, malformed or unknown config keys
    io = 3,           // missing/unreadable/unwritable or malformed files
    data = 4,         // contract violations: dimensions, labels, short clips
    convergence = 5,  // solver failed to converge
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorClass::data, what) {}
};

struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& what) : Error(ErrorClass::convergence, what) {}
};

}  // namespace sitqc
