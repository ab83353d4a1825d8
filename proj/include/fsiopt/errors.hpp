#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsiopt {

/// Numerically singular pivot during factorization.
class SingularMatrixError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// det(F) <= 0 at a quadrature point: the ALE map lost invertibility.
class MeshEntanglementError : public std::runtime_error {
public:
  MeshEntanglementError(std::size_t cell, double jacobian)
      : std::runtime_error("mesh entanglement in cell " + std::to_string(cell) +
                           " (det F = " + std::to_string(jacobian) + ")"),
        cell_(cell), jacobian_(jacobian) {}

  std::size_t cell() const { return cell_; }
  double jacobian() const { return jacobian_; }

private:
  std::size_t cell_;
  double jacobian_;
};

/// Newton failed: line search exhausted or iteration cap reached.
class NewtonError : public std::runtime_error {
public:
  enum class Kind { LineSearchFailure, NonConvergence };

  NewtonError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// Forward solve aborted at a given time step.
class ForwardSolveError : public std::runtime_error {
public:
  ForwardSolveError(int step, const std::string &what)
      : std::runtime_error("time step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

private:
  int step_;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace fsiopt
