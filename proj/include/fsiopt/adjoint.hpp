#pragma once

#include "fsiopt/assembly.hpp"
#include "fsiopt/functionals.hpp"
#include "fsiopt/timestepper.hpp"

#include <functional>
#include <span>
#include <vector>

namespace fsiopt {

struct AdjointResult {
  /// z[n] for n = 1..N; z[0] is empty.
  std::vector<std::vector<double>> z;
  /// ||A_n^T z^n - b^n|| / ||b^n|| per step (0 for a zero right-hand side).
  std::vector<double> relative_residual;
};

/// Source term dJ/dU^n of the adjoint equation at step n; an empty vector
/// means zero.
using AdjointSource = std::function<std::vector<double>(std::size_t n)>;

/// Backward sweep n = N..1:
///   A_n^T z^n = dJ/dU^n - C_{n+1}^T z^{n+1},
/// with A_n = dR_n/dU^n and C_{n+1} = dR_{n+1}/dU^n; homogeneous at all
/// constrained dofs.
AdjointResult run_adjoint(const FsiOperator &op, const ThetaScheme &scheme,
                          const Trajectory &trajectory, const AdjointSource &source,
                          double jacobian_average = 0.5);

/// Source for a functional of the final state only.
AdjointSource end_time_source(const FsiOperator &op, const CostFunctional &functional,
                              const Trajectory &trajectory);

/// dJ/dq = alpha (q - q_d) - sum_n z^n . [theta k dE/dq(U^n) + (1-theta) k dE/dq(U^{n-1})].
double reduced_gradient(const FsiOperator &op, const ThetaScheme &scheme,
                        const Trajectory &trajectory, const AdjointResult &adjoint,
                        const CostFunctional &functional, double q);

} // namespace fsiopt
