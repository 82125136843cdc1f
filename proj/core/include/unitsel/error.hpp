#pragma once

#include <stdexcept>
#include <string>

namespace unitsel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, created, or fully written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File opened fine but its contents violate the declared format.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Caller passed arguments outside an operation's domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace unitsel
