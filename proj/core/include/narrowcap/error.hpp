#pragma once

#include <stdexcept>
#include <string>

namespace narrowcap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (bad shape, point outside
/// the domain, trap too large for the expansion, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A truncated series did not reach its tolerance within the term budget, or
/// a point is too close to the boundary for the series to be trusted.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

}  // namespace detail
}  // namespace narrowcap
