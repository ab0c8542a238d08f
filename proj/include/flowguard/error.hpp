#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowguard {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    data = 2,
    numeric = 3,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual ExitCode exit_code() const noexcept { return ExitCode::data; }
};

/// Invalid or inconsistent configuration (bad key, out-of-range value).
class ConfigError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class EmptyTableError : public DataError {
public:
    using DataError::DataError;
};

/// A single table row failed to parse or validate. Row indices are 0-based data rows.
class RowError : public DataError {
public:
    RowError(std::size_t row, const std::string& message)
        : DataError("row " + std::to_string(row) + ": " + message), row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class DuplicateKeyError : public DataError {
public:
    using DataError::DataError;
};

class TopologyError : public DataError {
public:
    using DataError::DataError;
};

/// A feature required by a consumer is absent from a feature registry.
class RegistryError : public DataError {
public:
    using DataError::DataError;
};

class CheckpointError : public DataError {
public:
    using DataError::DataError;
};

/// A metric is undefined for the given labels (e.g. ROC-AUC with one class).
class UndefinedMetricError : public DataError {
public:
    using DataError::DataError;
};

/// A pipeline stage's upstream artifact is missing.
class MissingArtifactError : public DataError {
public:
    using DataError::DataError;
};

class ShapeError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::numeric; }
};

/// NaN or infinity produced by a numeric operation.
class NumericError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::numeric; }
};

}  // namespace flowguard
