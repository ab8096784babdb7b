#pragma once

#include <stdexcept>
#include <string>

namespace affectreg {

// Error taxonomy mirrors the CLI exit codes: usage errors exit 1, data and
// model-file errors exit 2, embedding-provider errors exit 3.

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Corrupt, truncated, or version-mismatched model container.
class ModelIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver or training loop (non-finite values,
// iteration budget exhausted).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace affectreg
