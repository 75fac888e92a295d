#pragma once

#include <stdexcept>
#include <string>

namespace dts {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout documents
class SchemaError : public Error {
 public:
  using Error::Error;
};
class GeometryError : public Error {
 public:
  using Error::Error;
};
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Tensors and windows
class DimMismatch : public Error {
 public:
  using Error::Error;
};
class WindowTooLarge : public Error {
 public:
  using Error::Error;
};
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Diffusion
class StepOutOfRange : public Error {
 public:
  using Error::Error;
};
class BackendError : public Error {
 public:
  using Error::Error;
};

// Attention
class OverlapError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace dts
