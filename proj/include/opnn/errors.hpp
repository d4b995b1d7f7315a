#pragma once

#include <stdexcept>
#include <string>

namespace opnn {

// Base error carrying a stable machine-parseable category. The CLI prints
// failures as "error:<category>: <message>".
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

// Tensor shape / axis disagreement.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

// Numeric input outside the documented domain (e.g. nonpositive spot).
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

// API misuse: bad configuration, missing gradients, wrong call sequence.
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error("usage", msg) {}
};

// Malformed input data (bad cell, non-monotone dates, duplicates).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error("data", msg) {}
};

// Input file does not match the expected schema (missing column / field).
struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error("schema", msg) {}
};

// Corrupt or wrong-version serialized artifact.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

// Artifact is well-formed but inconsistent with the requested use
// (e.g. checkpoint parameters do not match the model configuration).
struct IntegrityError : Error {
    explicit IntegrityError(const std::string& msg) : Error("integrity", msg) {}
};

// Iterative solver failed to converge within its budget.
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& msg) : Error("convergence", msg) {}
};

// Requested root/solution does not exist (e.g. price outside no-arbitrage bounds).
struct NoSolutionError : Error {
    explicit NoSolutionError(const std::string& msg) : Error("no-solution", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

// Training-loop failure (non-finite loss and similar).
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error("training", msg) {}
};

}  // namespace opnn
