#pragma once

#include <stdexcept>
#include <string>

namespace coldbox {

/// Bad input or configuration, detected before any real computation ran.
/// Messages name the offending parameter so CLI users can act on them.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A physical-domain precondition failed at runtime, e.g. the refrigeration
/// cycle being asked to pump heat without a temperature gradient.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An algorithm lost numerical health: degenerate innovation variance,
/// singular matrix, pivot breakdown. Optimizers treat these as "this
/// parameter set is hopeless", the CLI as exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace coldbox
