#pragma once

#include <stdexcept>
#include <string>

namespace memefuse {

/// Base of every error the library raises. `exit_code()` is the CLI contract:
/// 2 config, 3 training, 4 data validation, 5 undefined metric.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept = 0;
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch, int batch)
        : Error(what), epoch_(epoch), batch_(batch) {}
    int exit_code() const noexcept override { return 3; }
    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

private:
    int epoch_;
    int batch_;
};

class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// Bad magic, unsupported version, malformed manifest line.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

/// Payload size disagrees with the header.
class LengthError : public DataError {
public:
    using DataError::DataError;
};

/// Non-finite values, dangling indices, duplicate ids, missing labels.
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

/// Operand dimensions disagree.
class ShapeError : public DataError {
public:
    using DataError::DataError;
};

/// Metric is undefined for the input (empty, or single-class for AUC).
class MetricError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

} // namespace memefuse
