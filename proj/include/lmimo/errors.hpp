// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lmimo {

// Bad argument shape or value (length mismatch, non-finite sample, ...).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A sufficient condition for recovery is violated (e.g. T*Omega*e >= 1).
class ConditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ill-conditioned Gram matrix for zero-forcing.
class RankError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class AnchoringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedSqnrError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Config validation failure. Carries one diagnostic per offending field.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> diagnostics);
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

} // namespace lmimo
