/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <stdexcept>
#include <string>

namespace qrender {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (non-positive grid size, K = 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A caller broke a documented precondition (mismatched lengths, index out of range, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Input bytes could not be decoded.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally valid input is missing a required field or has the wrong layout.
class SchemaError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

/// Optimisation produced a non-finite loss.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int step) : Error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace qrender
