#include "fsiopt/functionals.hpp"

#include <stdexcept>

namespace fsiopt {

FunctionalKind parse_functional_kind(const std::string &name) {
  if (name == "TipDisplacementTracking" || name == "tracking")
    return FunctionalKind::TipDisplacementTracking;
  if (name == "DragAtEndTime" || name == "drag")
    return FunctionalKind::DragAtEndTime;
  throw std::invalid_argument("unknown functional '" + name + "'");
}

std::string functional_kind_name(FunctionalKind k) {
  return k == FunctionalKind::TipDisplacementTracking ? "TipDisplacementTracking"
                                                      : "DragAtEndTime";
}

double CostFunctional::state_value(const FsiOperator &op, std::span<const double> u_end) const {
  if (kind == FunctionalKind::DragAtEndTime)
    return op.boundary_traction(u_end, drag_markers, 0);
  const double d =
      evaluation_row(op.dofs(), Field::Displacement, 0, point).apply(u_end) - target;
  return 0.5 * d * d;
}

std::vector<double> CostFunctional::state_derivative(const FsiOperator &op,
                                                     std::span<const double> u_end) const {
  if (kind == FunctionalKind::DragAtEndTime)
    return op.boundary_traction_derivative(u_end, drag_markers, 0);
  const auto row = evaluation_row(op.dofs(), Field::Displacement, 0, point);
  const double d = row.apply(u_end) - target;
  std::vector<double> g(op.dofs().n_dofs(), 0.0);
  for (std::size_t i = 0; i < row.dofs.size(); ++i)
    g[row.dofs[i]] += d * row.weights[i];
  return g;
}

} // namespace fsiopt
