// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mcsc {

/// Invalid configuration (bad covariance, weights not summing to one, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violation on an operation's inputs.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss, gradient or update during optimisation.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or persistence failure; the message carries the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Result is mathematically undefined for the given inputs (e.g. diff accuracy
/// over a set with only tie labels).
class UndefinedResultError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mcsc
