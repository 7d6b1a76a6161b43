#pragma once

#include <stdexcept>
#include <string>

namespace ecopt {

// Base for every error raised by the library. The CLI maps the concrete
// type onto its exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data (malformed rows, empty slices, zero totals).
class DataError : public Error {
public:
    using Error::Error;
};

// Invalid run configuration or arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Numerical failure: rank deficiency, degenerate eigenvalues, zero variance.
class NumericError : public Error {
public:
    using Error::Error;
};

// Wraps an error with the pipeline stage it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause, int exit_code);

    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInfeasible = 4;

int exit_code_for(const Error& e) noexcept;

}  // namespace ecopt
