#pragma once

#include <stdexcept>
#include <string>

namespace dnnsplit {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidNetwork : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class MalformedPath : public Error {
 public:
  using Error::Error;
};

class GenerationFailed : public Error {
 public:
  using Error::Error;
};

class ZeroRate : public Error {
 public:
  using Error::Error;
};

class InvalidProgram : public Error {
 public:
  using Error::Error;
};

class InfeasibleTopology : public Error {
 public:
  using Error::Error;
};

// A solution that should have been integral was not (TU violation or
// numerical breakdown).
class FractionalSolution : public Error {
 public:
  using Error::Error;
};

class SizeLimit : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace dnnsplit
