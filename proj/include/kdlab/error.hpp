#pragma once

#include <stdexcept>
#include <string>

namespace kdlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InvalidLabel : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class MissingTargets : public Error {
public:
    using Error::Error;
};

class MissingTeacher : public Error {
public:
    using Error::Error;
};

class DegenerateKernel : public Error {
public:
    using Error::Error;
};

class UnstableStep : public Error {
public:
    using Error::Error;
};

/// Raised for malformed configuration text; carries the source position.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Raised for well-formed configuration text with invalid content.
class ValidationError : public Error {
public:
    ValidationError(const std::string& key, const std::string& what)
        : Error("invalid config key '" + key + "': " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A failure inside an experiment recipe, prefixed with the recipe name.
class RecipeError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

}  // namespace detail

}  // namespace kdlab
