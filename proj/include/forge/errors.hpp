#pragma once

#include <stdexcept>
#include <string>

namespace forge {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files and streams.
struct IoError : Error {
    using Error::Error;
};

// A file that does not parse or violates its schema.
struct FormatError : Error {
    using Error::Error;
};

// Domain violations in otherwise well-formed data (bad ranges, overflow,
// inconsistent series).
struct DataError : Error {
    using Error::Error;
};

// The invocation lacks a resource the operation needs (e.g. no model and no
// annotations). Maps to a usage error at the CLI.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace forge
