#pragma once

#include <stdexcept>
#include <string>

namespace ringorbit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters violate a precondition (n < 2, non-positive mass, bad tolerance, ...).
class InvalidConfiguration : public Error {
public:
    using Error::Error;
};

/// A state with r <= 0 or two coincident bodies was handed to a vector field.
class CollisionError : public Error {
public:
    using Error::Error;
};

/// The integrator could not make progress; typically r is heading to zero.
class CollisionSuspected : public Error {
public:
    using Error::Error;
};

/// The seed is not in the negative-energy, nonzero-angular-momentum family.
class OutsideFamily : public Error {
public:
    using Error::Error;
};

/// A closed-form bound was violated by a computed trajectory.
class TheoremViolation : public Error {
public:
    using Error::Error;
};

class ResourceExceeded : public Error {
public:
    using Error::Error;
};

/// Reduced and Cartesian integrations disagree beyond the caller's tolerance.
class DivergenceError : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

/// g(r) reconstruction hit a radius where the radial speed would be imaginary.
class InvalidSegment : public Error {
public:
    using Error::Error;
};

} // namespace ringorbit
