#include "fsiopt/timestepper.hpp"

#include "fsiopt/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace fsiopt {

void ThetaScheme::check() const {
  if (!(k > 0.0))
    throw std::invalid_argument("time step must be positive");
  if (steps < 1)
    throw std::invalid_argument("step count must be at least 1");
  if (variant == ThetaVariant::ShiftedCrankNicolson && !(k < 0.5))
    throw std::invalid_argument("shifted Crank-Nicolson requires k < 0.5");
}

ThetaVariant parse_theta_variant(const std::string &name) {
  if (name == "BackwardEuler" || name == "BE")
    return ThetaVariant::BackwardEuler;
  if (name == "ShiftedCrankNicolson" || name == "CNs")
    return ThetaVariant::ShiftedCrankNicolson;
  throw std::invalid_argument("unknown time scheme '" + name + "'");
}

std::string theta_variant_name(ThetaVariant v) {
  return v == ThetaVariant::BackwardEuler ? "BackwardEuler" : "ShiftedCrankNicolson";
}

double InflowSchedule::operator()(double t) const {
  if (!table.empty()) {
    if (t <= table.front().first)
      return table.front().second;
    if (t >= table.back().first)
      return table.back().second;
    const auto it = std::upper_bound(table.begin(), table.end(), t,
                                     [](double x, const auto &p) { return x < p.first; });
    const auto &[t1, v1] = *it;
    const auto &[t0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
  }
  if (ramp_time > 0.0 && t < ramp_time)
    return mean * 0.5 * (1.0 - std::cos(std::numbers::pi * t / ramp_time));
  return mean;
}

Trajectory::Trajectory(std::size_t memory_budget_bytes) : budget_(memory_budget_bytes) {}

Trajectory::~Trajectory() { clear_files(); }

Trajectory::Trajectory(Trajectory &&o) noexcept
    : budget_(o.budget_), bytes_(o.bytes_), times_(std::move(o.times_)),
      memory_(std::move(o.memory_)), files_(std::move(o.files_)), dir_(std::move(o.dir_)),
      last_(std::move(o.last_)) {
  o.files_.clear();
  o.dir_.clear();
}

Trajectory &Trajectory::operator=(Trajectory &&o) noexcept {
  if (this != &o) {
    clear_files();
    budget_ = o.budget_;
    bytes_ = o.bytes_;
    times_ = std::move(o.times_);
    memory_ = std::move(o.memory_);
    files_ = std::move(o.files_);
    dir_ = std::move(o.dir_);
    last_ = std::move(o.last_);
    o.files_.clear();
    o.dir_.clear();
  }
  return *this;
}

void Trajectory::clear_files() {
  if (dir_.empty())
    return;
  std::error_code ec;
  std::filesystem::remove_all(dir_, ec);
  dir_.clear();
  files_.clear();
}

void Trajectory::push_back(double time, std::span<const double> state) {
  const std::size_t n = times_.size();
  times_.push_back(time);
  last_.assign(state.begin(), state.end());
  const std::size_t bytes = state.size() * sizeof(double);
  if (bytes_ + bytes <= budget_) {
    memory_.emplace_back(state.begin(), state.end());
    files_.emplace_back();
    bytes_ += bytes;
    return;
  }
  if (dir_.empty()) {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    dir_ = std::filesystem::temp_directory_path() /
           ("fsiopt-trajectory-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  const auto path = dir_ / ("state-" + std::to_string(n) + ".bin");
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char *>(state.data()), static_cast<std::streamsize>(bytes));
  if (!out)
    throw std::runtime_error("cannot write trajectory file " + path.string());
  memory_.emplace_back();
  files_.push_back(path);
}

std::vector<double> Trajectory::state(std::size_t n) const {
  if (n >= times_.size())
    throw std::out_of_range("trajectory has no state " + std::to_string(n));
  if (files_[n].empty())
    return memory_[n];
  std::ifstream in(files_[n], std::ios::binary | std::ios::ate);
  if (!in)
    throw std::runtime_error("cannot read trajectory file " + files_[n].string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<double> s(size / sizeof(double));
  in.seekg(0);
  in.read(reinterpret_cast<char *>(s.data()), static_cast<std::streamsize>(size));
  return s;
}

std::size_t Trajectory::spilled() const {
  return static_cast<std::size_t>(
      std::count_if(files_.begin(), files_.end(), [](const auto &p) { return !p.empty(); }));
}

double ForwardResult::min_jacobian() const {
  double j = std::numeric_limits<double>::infinity();
  for (const auto &s : steps)
    j = std::min(j, s.min_jacobian);
  return j;
}

ForwardResult run_forward(const FsiOperator &op, const ThetaScheme &scheme,
                          const InflowSchedule &inflow, std::span<const double> u0,
                          const ForwardOptions &options) {
  scheme.check();
  const DofMap &dofs = op.dofs();
  if (u0.size() != dofs.n_dofs())
    throw std::invalid_argument("initial state has wrong length");
  ForwardResult result{Trajectory(options.memory_budget), {}};
  std::vector<double> u(u0.begin(), u0.end());
  result.trajectory.push_back(0.0, u);
  if (options.observer)
    options.observer(0, 0.0, u);
  const StepWeights w = scheme.weights(options.jacobian_average);

  for (int n = 1; n <= scheme.steps; ++n) {
    const double t = n * scheme.k;
    const std::vector<double> u_old = u;
    dofs.apply_constraints(u, inflow(t));
    NonlinearSystem system;
    system.residual = [&](std::span<const double> x) { return op.residual(x, u_old, w); };
    system.jacobian = [&](std::span<const double> x) {
      SparseOperator a = op.jacobian(x, u_old, w);
      constrain_homogeneous(a, dofs);
      return a;
    };
    StepReport report;
    report.step = n;
    report.time = t;
    try {
      report.newton = newton_solve(system, u, options.newton);
      report.min_jacobian = op.min_jacobian(u);
      if (!(report.min_jacobian > 0.0))
        throw MeshEntanglementError(0, report.min_jacobian);
    } catch (const std::exception &e) {
      throw ForwardSolveError(n, e.what());
    }
    result.trajectory.push_back(t, u);
    result.steps.push_back(std::move(report));
    if (options.observer)
      options.observer(n, t, u);
  }
  return result;
}

} // namespace fsiopt
