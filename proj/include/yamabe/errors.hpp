// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace yamabe {

/// Base of every library error. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

/// Bad input: out-of-range parameters, malformed config, grid mismatch.
class InvalidArgument : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// An iterative procedure ran out of iterations or diverged.
class ConvergenceError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

/// A computed certificate or invariant check did not hold.
class CertificateError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 4; }
};

/// The weighted mass is singular; the caller should use the degenerate-weight certificate.
class SingularMassError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

}  // namespace yamabe
