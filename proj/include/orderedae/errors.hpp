#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oae {

/// Precondition violated by the caller (dimension mismatch, index out of range).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine produced NaN or failed to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based; 0 when the file as a whole is bad.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Dataset cannot be used as given (e.g. a constant variable).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nonlinear solve that stopped without reaching its residual tolerance.
class NoConvergenceError : public NumericalError {
public:
    NoConvergenceError(const std::string& what, std::vector<double> best, double residual_norm)
        : NumericalError(what), best_(std::move(best)), residual_norm_(residual_norm) {}
    const std::vector<double>& best_iterate() const noexcept { return best_; }
    double residual_norm() const noexcept { return residual_norm_; }

private:
    std::vector<double> best_;
    double residual_norm_;
};

/// Extraction was asked for on a model that collapsed to A_Er = 0, ybar_r = 0.
class TrivialSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Extraction was asked for but the model has no residual latent variables.
class NothingToExtractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace oae
