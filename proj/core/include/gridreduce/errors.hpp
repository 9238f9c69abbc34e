#pragma once

#include <stdexcept>
#include <string>

namespace gridreduce {

// Base for everything this library throws deliberately.
class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data (case files, zone files, mismatched artifacts). CLI exit code 2.
class InputError : public GridError {
public:
    using GridError::GridError;
};

// Numerical failure (singular systems, non-convergence). CLI exit code 3.
class NumericalError : public GridError {
public:
    using GridError::GridError;
};

class MalformedCase : public InputError {
public:
    using InputError::InputError;
};

class NoSlack : public InputError {
public:
    using InputError::InputError;
};

class Disconnected : public InputError {
public:
    using InputError::InputError;
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

class OverlappingZones : public InputError {
public:
    using InputError::InputError;
};

class UnknownBus : public InputError {
public:
    using InputError::InputError;
};

class DisconnectedReduction : public InputError {
public:
    using InputError::InputError;
};

class ZeroReactanceBranch : public InputError {
public:
    using InputError::InputError;
};

class HashMismatch : public InputError {
public:
    using InputError::InputError;
};

class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularJacobian : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TooManyFailures : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace gridreduce
