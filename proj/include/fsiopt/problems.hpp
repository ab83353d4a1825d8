#pragma once

#include "fsiopt/assembly.hpp"
#include "fsiopt/functionals.hpp"
#include "fsiopt/newton.hpp"
#include "fsiopt/optimize.hpp"
#include "fsiopt/timestepper.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fsiopt {

enum class ProblemKind { FSI1, FSI3, Flapping, Beam };

ProblemKind parse_problem_kind(const std::string &name);
std::string problem_kind_name(ProblemKind k);

/// Everything needed to set up and run one configuration. Sections and keys
/// of the config file are listed in the README.
struct ProblemConfig {
  ProblemKind kind = ProblemKind::FSI1;
  int refinements = 0;

  MaterialParams material;
  /// Initial control q^0 (shear modulus of the control region).
  double q0 = 0.5e6;

  InflowProfile inflow_profile;
  double inflow_mean = 0.2;
  double inflow_ramp = 0.0;
  std::vector<std::pair<double, double>> inflow_table;

  ThetaScheme scheme;
  CostFunctional functional;
  /// Tracking target computed from a reference run at this shear modulus
  /// instead of functional.target ("target = auto").
  bool auto_target = false;
  double reference_mu = 0.5e6;

  NewtonSettings newton;
  OptimizerSettings optimizer;
  std::size_t memory_budget = std::size_t(1) << 31;
  Execution execution = Execution::Parallel;
  /// Mesh read from this file (line grammar in the README) instead of the
  /// generated one; refinements are applied on top.
  std::filesystem::path mesh_file;
  /// Gauss points per direction in cells and on facets.
  int quadrature_points = 3;
  /// Fix the first pressure dof to zero (debugging; the outflow condition
  /// already fixes the pressure level).
  bool pin_pressure = false;

  FlappingGeometry flapping;
  double beam_length = 1.0;
  double beam_thickness = 0.1;
  int beam_nx = 20;
  int beam_ny = 2;
  /// Tip deflection of the initial beam state (released from rest).
  double beam_deflection = 1e-3;
  /// Inverse iterations toward the first bending mode, starting from the
  /// static deflection under a uniform load.
  int beam_mode_iterations = 3;

  std::vector<double> fd_steps{1e-2, 1e-1, 1.0, 10.0};
  double grad_check_threshold = 1e-3;
};

/// Defaults of one configuration.
ProblemConfig default_config(ProblemKind kind);

/// Sets one "section.key" entry; throws ConfigError for unknown keys or
/// malformed values.
void set_config_value(ProblemConfig &config, const std::string &key, const std::string &value);

/// Reads an INI file (or nothing for an empty path), starting from the
/// defaults of its problem.name, then applies "section.key=value"
/// overrides. Relative table paths resolve against the file's directory.
ProblemConfig load_config(const std::filesystem::path &path,
                          const std::vector<std::string> &overrides = {});

/// INI text that load_config reads back to the same configuration.
std::string config_to_ini(const ProblemConfig &config);

/// Reads "t,v" lines (comments with '#', optional header).
std::vector<std::pair<double, double>> read_inflow_table(const std::filesystem::path &path);

/// Default flapping pulse: half sine over [0, 0.579375] peaking at 20.
std::vector<std::pair<double, double>> default_flapping_pulse();

BoundaryConditions boundary_conditions(const ProblemConfig &config);

/// Linearized solid displacement u = (K^-1 M)^m K^-1 f for a uniform load f
/// in y, scaled to the given y displacement at tip; other fields zero.
/// m = 0 is the static deflection.
std::vector<double> beam_mode_shape(const FsiOperator &op, const Point &tip, double deflection,
                                    int iterations);
Mesh build_mesh(const ProblemConfig &config);

/// Mesh, dofs, operator and initial state of a configuration.
class Problem {
public:
  explicit Problem(ProblemConfig config);
  Problem(const Problem &) = delete;
  Problem &operator=(const Problem &) = delete;

  const ProblemConfig &config() const { return config_; }
  const Mesh &mesh() const { return *mesh_; }
  const DofMap &dofs() const { return *dofs_; }
  FsiOperator &op() { return *op_; }
  const FsiOperator &op() const { return *op_; }
  const ThetaScheme &scheme() const { return config_.scheme; }
  const InflowSchedule &inflow() const { return inflow_; }
  const std::vector<double> &initial_state() const { return u0_; }
  ForwardOptions forward_options() const;

  /// Cost functional with the tracking target resolved (runs the reference
  /// solve on first use when the target is "auto").
  const CostFunctional &functional();

  ForwardResult forward(double q, const ForwardOptions &options);
  ForwardResult forward(double q) { return forward(q, forward_options()); }

  FsiReducedFunctional reduced_functional();

private:
  ProblemConfig config_;
  std::unique_ptr<Mesh> mesh_;
  std::unique_ptr<DofMap> dofs_;
  std::unique_ptr<FsiOperator> op_;
  InflowSchedule inflow_;
  std::vector<double> u0_;
  bool target_resolved_ = false;
};

} // namespace fsiopt
