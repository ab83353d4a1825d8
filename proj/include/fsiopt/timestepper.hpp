#pragma once

#include "fsiopt/assembly.hpp"
#include "fsiopt/newton.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace fsiopt {

enum class ThetaVariant { BackwardEuler, ShiftedCrankNicolson };

struct ThetaScheme {
  ThetaVariant variant = ThetaVariant::BackwardEuler;
  double k = 1.0;
  int steps = 1;

  /// 1 for backward Euler, 0.5 + k for the shifted Crank-Nicolson scheme.
  double theta() const { return variant == ThetaVariant::BackwardEuler ? 1.0 : 0.5 + k; }
  double end_time() const { return k * steps; }
  StepWeights weights(double jacobian_average = 0.5) const { return {k, theta(), jacobian_average}; }
  /// Throws std::invalid_argument for k <= 0, steps < 1, or k >= 0.5 with
  /// the shifted scheme.
  void check() const;
};

ThetaVariant parse_theta_variant(const std::string &name);
std::string theta_variant_name(ThetaVariant v);

/// Mean inflow velocity over time: either a constant with an optional
/// smooth start v * (1 - cos(pi t / ramp)) / 2 for t < ramp, or a table of
/// (t, v) samples interpolated linearly (constant beyond the ends).
struct InflowSchedule {
  double mean = 0.0;
  double ramp_time = 0.0;
  std::vector<std::pair<double, double>> table;

  double operator()(double t) const;
};

/// States U^0..U^N with time stamps. States beyond the memory budget are
/// written to files in a private temporary directory.
class Trajectory {
public:
  explicit Trajectory(std::size_t memory_budget_bytes = std::size_t(1) << 31);
  ~Trajectory();
  Trajectory(Trajectory &&) noexcept;
  Trajectory &operator=(Trajectory &&) noexcept;
  Trajectory(const Trajectory &) = delete;
  Trajectory &operator=(const Trajectory &) = delete;

  void push_back(double time, std::span<const double> state);
  std::size_t size() const { return times_.size(); }
  double time(std::size_t n) const { return times_.at(n); }
  std::vector<double> state(std::size_t n) const;
  const std::vector<double> &back() const { return last_; }
  std::size_t spilled() const;

private:
  void clear_files();

  std::size_t budget_;
  std::size_t bytes_ = 0;
  std::vector<double> times_;
  std::vector<std::vector<double>> memory_;
  std::vector<std::filesystem::path> files_;
  std::filesystem::path dir_;
  std::vector<double> last_;
};

struct StepReport {
  int step = 0;
  double time = 0.0;
  NewtonReport newton;
  double min_jacobian = 1.0;
};

struct ForwardOptions {
  NewtonSettings newton;
  std::size_t memory_budget = std::size_t(1) << 31;
  double jacobian_average = 0.5;
  /// Called after every accepted step (and for the initial state with step 0).
  std::function<void(int step, double time, std::span<const double> state)> observer;
};

struct ForwardResult {
  Trajectory trajectory;
  std::vector<StepReport> steps;

  double min_jacobian() const;
};

/// Solves the one-step-theta system for n = 1..N with Newton's method. The
/// initial guess of each step is the previous state with updated Dirichlet
/// values. Throws ForwardSolveError (with the step index) on Newton failure,
/// a singular Jacobian or mesh entanglement.
ForwardResult run_forward(const FsiOperator &op, const ThetaScheme &scheme,
                          const InflowSchedule &inflow, std::span<const double> u0,
                          const ForwardOptions &options = {});

} // namespace fsiopt
