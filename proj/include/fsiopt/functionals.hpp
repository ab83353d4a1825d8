#pragma once

#include "fsiopt/assembly.hpp"
#include "fsiopt/timestepper.hpp"

#include <span>
#include <string>
#include <vector>

namespace fsiopt {

enum class FunctionalKind { TipDisplacementTracking, DragAtEndTime };

FunctionalKind parse_functional_kind(const std::string &name);
std::string functional_kind_name(FunctionalKind k);

/// J(q, U) = state term at the end time + alpha/2 |q - q_d|^2.
/// Tracking: 1/2 (u_1(A, T) - u_d)^2. Drag: integral of the transformed
/// fluid traction in x over the drag facets.
struct CostFunctional {
  FunctionalKind kind = FunctionalKind::TipDisplacementTracking;
  double target = 0.0;
  double alpha = 0.0;
  double q_ref = 0.0;
  Point point{0.6, 0.2};
  MarkerSet drag_markers = bit(Marker::DragBoundary);

  /// State part evaluated at the final state.
  double state_value(const FsiOperator &op, std::span<const double> u_end) const;
  double regularization(double q) const { return 0.5 * alpha * (q - q_ref) * (q - q_ref); }
  double value(const FsiOperator &op, std::span<const double> u_end, double q) const {
    return state_value(op, u_end) + regularization(q);
  }
  /// Gradient of state_value with respect to the final state.
  std::vector<double> state_derivative(const FsiOperator &op, std::span<const double> u_end) const;
  double control_derivative(double q) const { return alpha * (q - q_ref); }
};

} // namespace fsiopt
