#pragma once

#include <stdexcept>
#include <string>

namespace crackopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed mesh input or a mesh that violates a topological invariant.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// A mesh update produced a triangle with non-positive signed area.
class InversionError : public MeshError {
 public:
  InversionError(const std::string& what, int element)
      : MeshError(what), element_(element) {}
  int element() const noexcept { return element_; }

 private:
  int element_;
};

/// Singular system, failed factorization or a non-converged nonlinear solve.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration that is unparseable or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace crackopt
