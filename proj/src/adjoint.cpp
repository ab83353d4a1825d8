#include "fsiopt/adjoint.hpp"

#include <stdexcept>

namespace fsiopt {

AdjointResult run_adjoint(const FsiOperator &op, const ThetaScheme &scheme,
                          const Trajectory &trajectory, const AdjointSource &source,
                          double jacobian_average) {
  const DofMap &dofs = op.dofs();
  const std::size_t N = static_cast<std::size_t>(scheme.steps);
  if (trajectory.size() != N + 1)
    throw std::invalid_argument("trajectory length does not match the time scheme");
  const StepWeights w = scheme.weights(jacobian_average);
  const std::size_t n_dofs = dofs.n_dofs();

  AdjointResult result;
  result.z.resize(N + 1);
  result.relative_residual.assign(N + 1, 0.0);
  std::vector<double> next_state; // U^{n+1}
  std::vector<double> state = trajectory.state(N);
  for (std::size_t n = N; n >= 1; --n) {
    const std::vector<double> prev = trajectory.state(n - 1);
    std::vector<double> rhs = source(n);
    if (rhs.empty())
      rhs.assign(n_dofs, 0.0);
    if (n < N) {
      const SparseOperator c = op.jacobian_old(next_state, state, w);
      std::vector<double> ct(n_dofs);
      c.multiply_transposed(result.z[n + 1], ct);
      axpy(-1.0, ct, rhs);
    }
    dofs.zero_constrained(rhs);
    if (norm2(rhs) == 0.0) {
      result.z[n].assign(n_dofs, 0.0);
    } else {
      SparseOperator a = op.jacobian(state, prev, w);
      constrain_homogeneous(a, dofs);
      result.z[n] = LUFactorization(a).solve_transposed(rhs);
      std::vector<double> check(n_dofs);
      a.multiply_transposed(result.z[n], check);
      axpy(-1.0, rhs, check);
      result.relative_residual[n] = norm2(check) / norm2(rhs);
    }
    next_state.swap(state);
    state = prev;
  }
  return result;
}

AdjointSource end_time_source(const FsiOperator &op, const CostFunctional &functional,
                              const Trajectory &trajectory) {
  const std::size_t N = trajectory.size() - 1;
  return [&op, &functional, &trajectory, N](std::size_t n) -> std::vector<double> {
    if (n != N)
      return {};
    return functional.state_derivative(op, trajectory.state(N));
  };
}

double reduced_gradient(const FsiOperator &op, const ThetaScheme &scheme,
                        const Trajectory &trajectory, const AdjointResult &adjoint,
                        const CostFunctional &functional, double q) {
  const std::size_t N = static_cast<std::size_t>(scheme.steps);
  if (trajectory.size() != N + 1 || adjoint.z.size() != N + 1)
    throw std::invalid_argument("trajectory and adjoint lengths do not match");
  const double k = scheme.k, theta = scheme.theta();
  double g = functional.control_derivative(q);
  std::vector<double> b_prev = op.control_derivative_E(trajectory.state(0));
  for (std::size_t n = 1; n <= N; ++n) {
    std::vector<double> b = op.control_derivative_E(trajectory.state(n));
    g -= theta * k * dot(adjoint.z[n], b);
    if (theta < 1.0)
      g -= (1.0 - theta) * k * dot(adjoint.z[n], b_prev);
    b_prev.swap(b);
  }
  return g;
}

} // namespace fsiopt
