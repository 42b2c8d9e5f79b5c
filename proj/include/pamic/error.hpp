#pragma once

#include <stdexcept>
#include <string>

namespace pamic {

/// Base of every error the library throws. The CLI maps the concrete
/// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical or configuration parameter is outside its valid domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Shapes of vectors, batches or layers do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A file parsed fine but its content contradicts its declared schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed (malformed or truncated).
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Training produced NaN or infinite parameters.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace pamic
