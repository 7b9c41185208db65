#pragma once

#include <stdexcept>
#include <string>

namespace hype {

// Every error raised by the library derives from Error so callers (notably the
// CLI) can map categories onto exit codes without string matching.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class DimensionError : public Error {
   public:
    using Error::Error;
};

// Caller violated an operation's precondition (e.g. backward on a non-scalar).
class UsageError : public Error {
   public:
    using Error::Error;
};

// Bad user-facing input: out-of-range labels, overlong sequences, bad k.
class InputError : public Error {
   public:
    using Error::Error;
};

// Corrupt or incompatible serialized file.
class FormatError : public Error {
   public:
    using Error::Error;
};

class VersionError : public FormatError {
   public:
    using FormatError::FormatError;
};

// Malformed dataset record; message carries the 1-based line number.
class ParseError : public Error {
   public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

   private:
    std::size_t line_;
};

class DatasetError : public Error {
   public:
    using Error::Error;
};

class MappingError : public Error {
   public:
    using Error::Error;
};

class ConfigError : public Error {
   public:
    using Error::Error;
};

class IoError : public Error {
   public:
    using Error::Error;
};

}  // namespace hype
