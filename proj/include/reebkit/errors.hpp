#ifndef REEBKIT_ERRORS_HPP
#define REEBKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace reebkit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument to a constructor or operation (r <= 0, empty grid, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Expression text could not be parsed. `position` is a 0-based offset.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at offset " + std::to_string(position) + ")"), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// A subexpression hit a singular point: tan at a pole, division by ~0,
/// negative power of zero, or a non-finite intermediate.
class SingularEvaluation : public Error {
public:
    using Error::Error;
};

/// The contact condition fails at the requested point, so the Reeb field
/// cannot be normalized there.
class DegeneratePoint : public Error {
public:
    using Error::Error;
};

class NonCoprime : public Error {
public:
    using Error::Error;
};

/// A slope transform hit its pole (the image is the meridional slope).
class SlopeAtInfinity : public Error {
public:
    using Error::Error;
};

class SearchExhausted : public Error {
public:
    using Error::Error;
};

class IncompatibleBranching : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

class TransversalityError : public Error {
public:
    using Error::Error;
};

class NoReturn : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class TorusDrift : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace reebkit

#endif
