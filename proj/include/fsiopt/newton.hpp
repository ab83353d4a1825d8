#pragma once

#include "fsiopt/linalg.hpp"

#include <functional>
#include <span>
#include <vector>

namespace fsiopt {

struct NewtonSettings {
  /// Relative reduction of the residual norm.
  double tolerance = 1e-8;
  int max_iterations = 30;
  double backtrack = 0.6;
  /// Largest backtracking exponent l_M.
  int max_backtracks = 5;
  /// The Jacobian is rebuilt when the last contraction ratio falls in
  /// [reuse_low, reuse_high] or the last step was damped.
  double reuse_low = 1e-3;
  double reuse_high = 1.0;
  /// Residual norm below which a state counts as converged.
  double absolute_floor = 1e-12;
  bool always_rebuild = false;
};

struct NewtonIteration {
  int iteration = 0;
  double residual = 0.0;
  double lambda = 1.0;
  bool rebuilt = false;
};

struct NewtonReport {
  bool converged = false;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  int factorizations = 0;
  std::vector<NewtonIteration> history;

  int iterations() const { return static_cast<int>(history.size()); }
  /// True if every accepted iterate reduced the residual norm.
  bool monotone() const;
};

/// Residual with constrained rows zeroed and the matching Jacobian with
/// identity rows/columns at constrained dofs.
struct NonlinearSystem {
  std::function<std::vector<double>(std::span<const double>)> residual;
  std::function<SparseOperator(std::span<const double>)> jacobian;
};

/// Damped Newton iteration on u in place. Throws NewtonError on line-search
/// failure or when max_iterations is exceeded, SingularMatrixError from the
/// factorization. A MeshEntanglementError raised by a trial residual counts
/// as a rejected trial.
NewtonReport newton_solve(const NonlinearSystem &system, std::vector<double> &u,
                          const NewtonSettings &settings = {});

} // namespace fsiopt
