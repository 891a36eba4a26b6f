#pragma once

#include <stdexcept>
#include <string>

namespace muonkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible (no broadcasting is ever attempted).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity reached an operation boundary.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// An argument violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}    // namespace muonkit
