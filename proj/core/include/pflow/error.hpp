#pragma once

#include <stdexcept>
#include <string>

namespace pflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed case data, invalid arguments, bad configuration.
class InputError : public Error {
  public:
    using Error::Error;
};

/// Graph problems: disconnected, non-radial, unknown endpoints.
class TopologyError : public Error {
  public:
    using Error::Error;
};

/// Non-finite values, singular systems, iterative divergence.
class NumericalError : public Error {
  public:
    using Error::Error;
};

}  // namespace pflow
