#pragma once

#include <stdexcept>
#include <string>

namespace povreg {

/// Bad input: malformed files, bound violations, inconsistent arguments.
/// The CLI maps it to exit status 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a usable result (singular design,
/// failed factorization, non-finite draws). The CLI maps it to exit status 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace povreg
