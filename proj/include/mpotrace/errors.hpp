#pragma once

#include <stdexcept>
#include <string>

namespace mpotrace {

// Mismatched extents, site counts or physical dimensions.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite data or a broken numerical invariant.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operator is not Hermitian within the driver tolerance.
class HermiticityError : public NumericError {
public:
    using NumericError::NumericError;
};

// A spectral function produced a non-finite value at a quadrature node.
class EvaluationError : public NumericError {
public:
    using NumericError::NumericError;
};

// A dense fallback was asked for more than it is allowed to allocate.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A file does not follow the MPO/MPS document layout.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace mpotrace
