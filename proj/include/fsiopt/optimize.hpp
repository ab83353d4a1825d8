#pragma once

#include "fsiopt/adjoint.hpp"
#include "fsiopt/functionals.hpp"
#include "fsiopt/timestepper.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsiopt {

using Control = std::vector<double>;

/// q -> J(q, U(q)) with its gradient.
class ReducedFunctional {
public:
  virtual ~ReducedFunctional() = default;
  virtual double value(const Control &q) = 0;
  virtual Control gradient(const Control &q) = 0;
  /// Wall time of the last value / gradient call.
  virtual double last_forward_seconds() const { return 0.0; }
  virtual double last_adjoint_seconds() const { return 0.0; }
};

/// Reduced functional of a time-dependent FSI problem with a scalar control
/// (the shear modulus of the control region). The forward trajectory of the
/// last value() call is kept for the following gradient() at the same q.
class FsiReducedFunctional : public ReducedFunctional {
public:
  FsiReducedFunctional(FsiOperator &op, ThetaScheme scheme, InflowSchedule inflow,
                       std::vector<double> u0, CostFunctional functional,
                       ForwardOptions options = {});

  double value(const Control &q) override;
  Control gradient(const Control &q) override;
  double last_forward_seconds() const override { return forward_seconds_; }
  double last_adjoint_seconds() const override { return adjoint_seconds_; }

  /// Called after every completed forward solve.
  std::function<void(double q, const ForwardResult &)> on_forward;

  const ForwardResult &forward(const Control &q);
  const AdjointResult &last_adjoint() const { return *adjoint_; }
  const FsiOperator &op() const { return op_; }
  const ThetaScheme &scheme() const { return scheme_; }
  const CostFunctional &functional() const { return functional_; }

private:
  FsiOperator &op_;
  ThetaScheme scheme_;
  InflowSchedule inflow_;
  std::vector<double> u0_;
  CostFunctional functional_;
  ForwardOptions options_;
  std::optional<double> cached_q_;
  std::optional<ForwardResult> cached_;
  std::optional<AdjointResult> adjoint_;
  double forward_seconds_ = 0.0;
  double adjoint_seconds_ = 0.0;
};

struct OptimizerSettings {
  double gamma = 1e-4;
  double beta = 0.5;
  /// Stop when ||grad|| < tolerance or ||grad|| / ||grad_0|| < relative_tolerance.
  double tolerance = 0.0;
  double relative_tolerance = 1e-12;
  int max_iterations = 10;
  int max_armijo_trials = 30;
  void check() const;
};

struct OptimizationRecord {
  int iteration = 0;
  double value = 0.0;
  Control q;
  double grad_norm = 0.0;
  double grad_norm_rel = 0.0;
  /// Step length of the step leaving this iterate (0 for the last one).
  double beta = 0.0;
  int armijo_trials = 0;
  double forward_seconds = 0.0;
  double adjoint_seconds = 0.0;
};

struct OptimizationLog {
  std::vector<OptimizationRecord> records;
  std::string stop_reason;

  /// Columns: iter,J,q,grad_norm_rel,beta,armijo_trials,forward_seconds,adjoint_seconds
  void write_csv(std::ostream &out) const;
};

struct OptimizationResult {
  Control q;
  OptimizationLog log;
};

class ArmijoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Gradient method with Armijo backtracking: q_{k+1} = q_k - beta^l grad J(q_k)
/// for the smallest l with J(q_{k+1}) <= J(q_k) - gamma beta^l ||grad J(q_k)||^2.
/// Throws ArmijoError when max_armijo_trials is exceeded; the log so far is
/// passed to on_record before that.
OptimizationResult gradient_method(ReducedFunctional &f, const Control &q0,
                                   const OptimizerSettings &settings = {},
                                   const std::function<void(const OptimizationRecord &)> &on_record = {});

} // namespace fsiopt
