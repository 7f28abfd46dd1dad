#pragma once

#include <stdexcept>
#include <string>

namespace emea {

// Base for all engine errors. The CLI maps these to nonzero exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (wrong field count, bad number, ...). Carries a line number.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

// Labels that do not resolve, duplicate links, coverage gaps.
struct DataError : Error {
    using Error::Error;
};

// Invalid configuration values (empty seeds, bad counts, degenerate synth configs).
struct ConfigError : Error {
    using Error::Error;
};

// Evaluation preconditions violated (test entity missing from rows, partial rows).
struct EvalError : Error {
    using Error::Error;
};

// Numerical failure (diverged objective, non-finite values).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace emea
