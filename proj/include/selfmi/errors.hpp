#pragma once

#include <stdexcept>
#include <string>

namespace selfmi {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/dimension mismatch between tensors.
struct ShapeError : Error {
    using Error::Error;
};

// Violated call contract (non-scalar backward target, empty batch, ...).
struct ContractError : Error {
    using Error::Error;
};

// Domain or numerical failure (log of non-positive, degenerate norm,
// non-finite loss).
struct ValueError : Error {
    using Error::Error;
};

// Bad run configuration (unknown key, missing required key, invalid value).
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem / serialization failure.
struct IoError : Error {
    using Error::Error;
};

// Malformed input file; message carries the line number.
struct ParseError : IoError {
    using IoError::IoError;
};

}  // namespace selfmi
