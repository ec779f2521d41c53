#pragma once

#include <stdexcept>
#include <string>
#include <vector>
#include <cmath>
#include <cstdint>

namespace sero {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& file, long line, const std::string& msg)
        : Error(file + ":" + std::to_string(line) + ": " + msg),
          file_(file), line_(line) {}
    ParseError(const std::string& file, const std::string& msg)
        : Error(file + ": " + msg), file_(file), line_(0) {}
    explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
    const std::string& file() const { return file_; }
    long line() const { return line_; }
private:
    std::string file_;
    long line_ = 0;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Bad configuration or unusable input data.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// An iterative procedure failed to converge. `trace` holds a short
/// human-readable account of the final iterations.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::string trace = {})
        : Error(msg), trace_(std::move(trace)) {}
    const std::string& trace() const { return trace_; }
private:
    std::string trace_;
};

inline bool nearly_equal(double a, double b, double rel = 1e-12, double abs_tol = 1e-300) {
    const double diff = std::fabs(a - b);
    return diff <= abs_tol || diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

} // namespace sero
