#pragma once

#include <stdexcept>
#include <string>

namespace slp {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem / decode failures. Message always carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

// Bad or missing configuration (unknown backbone, malformed key, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Structured-file parse failure; message carries line/field context.
class ParseError : public Error {
public:
    using Error::Error;
};

// Caller violated an operation precondition (shape mismatch, empty domain, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A dataset directory produced zero records.
class DatasetEmpty : public Error {
public:
    using Error::Error;
};

}  // namespace slp
