// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gflow {

// Base for every error raised by the library. The CLI maps the subclasses
// onto exit codes (config 2, numeric 3, io 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad config values, malformed skeleton, unknown preset.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Shape or size mismatch between tensors / configurations.
class ShapeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Singular matrices, non-finite values, degenerate statistics.
class NumericError : public Error {
public:
    using Error::Error;
};

// File missing, unreadable, truncated or malformed.
class IoError : public Error {
public:
    using Error::Error;
};

#define GFLOW_CHECK(cond, ErrorType, msg)                                                  \
    do {                                                                                   \
        if (!(cond)) throw ErrorType(msg);                                                 \
    } while (0)

}  // namespace gflow
