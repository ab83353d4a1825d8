#include "fsiopt/optimize.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace fsiopt {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double norm(const Control &g) {
  double s = 0.0;
  for (double x : g)
    s += x * x;
  return std::sqrt(s);
}

} // namespace

FsiReducedFunctional::FsiReducedFunctional(FsiOperator &op, ThetaScheme scheme,
                                           InflowSchedule inflow, std::vector<double> u0,
                                           CostFunctional functional, ForwardOptions options)
    : op_(op), scheme_(scheme), inflow_(std::move(inflow)), u0_(std::move(u0)),
      functional_(functional), options_(std::move(options)) {}

const ForwardResult &FsiReducedFunctional::forward(const Control &q) {
  if (q.size() != 1)
    throw std::invalid_argument("the FSI control is a scalar");
  if (cached_q_ && *cached_q_ == q[0])
    return *cached_;
  if (!(q[0] > 0.0))
    throw std::invalid_argument("control must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  cached_.reset();
  cached_q_.reset();
  op_.set_control(q[0]);
  cached_.emplace(run_forward(op_, scheme_, inflow_, u0_, options_));
  cached_q_ = q[0];
  forward_seconds_ = seconds_since(t0);
  if (on_forward)
    on_forward(q[0], *cached_);
  return *cached_;
}

double FsiReducedFunctional::value(const Control &q) {
  const ForwardResult &fw = forward(q);
  return functional_.value(op_, fw.trajectory.back(), q[0]);
}

Control FsiReducedFunctional::gradient(const Control &q) {
  const ForwardResult &fw = forward(q);
  op_.set_control(q[0]);
  const auto t0 = std::chrono::steady_clock::now();
  adjoint_.emplace(
      run_adjoint(op_, scheme_, fw.trajectory, end_time_source(op_, functional_, fw.trajectory),
                  options_.jacobian_average));
  const double g = reduced_gradient(op_, scheme_, fw.trajectory, *adjoint_, functional_, q[0]);
  adjoint_seconds_ = seconds_since(t0);
  return {g};
}

void OptimizerSettings::check() const {
  if (!(gamma > 0.0 && gamma < 0.5))
    throw std::invalid_argument("gamma must lie in (0, 1/2)");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("beta must lie in (0, 1)");
  if (max_iterations < 0 || max_armijo_trials < 1)
    throw std::invalid_argument("iteration limits must be positive");
}

void OptimizationLog::write_csv(std::ostream &out) const {
  out << "iter,J,q,grad_norm_rel,beta,armijo_trials,forward_seconds,adjoint_seconds\n";
  for (const auto &r : records) {
    std::ostringstream q;
    q << std::setprecision(12);
    for (std::size_t i = 0; i < r.q.size(); ++i)
      q << (i ? ";" : "") << r.q[i];
    out << std::setprecision(12) << r.iteration << ',' << r.value << ',' << q.str() << ','
        << r.grad_norm_rel << ',' << r.beta << ',' << r.armijo_trials << ','
        << std::setprecision(6) << r.forward_seconds << ',' << r.adjoint_seconds << '\n';
  }
}

OptimizationResult gradient_method(ReducedFunctional &f, const Control &q0,
                                   const OptimizerSettings &settings,
                                   const std::function<void(const OptimizationRecord &)> &on_record) {
  settings.check();
  OptimizationResult result;
  Control q = q0;
  double J = f.value(q);
  double forward_time = f.last_forward_seconds();
  double g0 = 0.0;
  for (int it = 0;; ++it) {
    const Control g = f.gradient(q);
    const double gn = norm(g);
    if (it == 0)
      g0 = gn;
    OptimizationRecord rec;
    rec.iteration = it;
    rec.value = J;
    rec.q = q;
    rec.grad_norm = gn;
    rec.grad_norm_rel = g0 > 0.0 ? gn / g0 : 0.0;
    rec.forward_seconds = forward_time;
    rec.adjoint_seconds = f.last_adjoint_seconds();

    std::string stop;
    if (gn < settings.tolerance || gn == 0.0)
      stop = "gradient below tolerance";
    else if (rec.grad_norm_rel < settings.relative_tolerance)
      stop = "relative gradient below tolerance";
    else if (it >= settings.max_iterations)
      stop = "iteration limit";
    if (!stop.empty()) {
      result.log.records.push_back(rec);
      if (on_record)
        on_record(rec);
      result.log.stop_reason = stop;
      result.q = q;
      return result;
    }

    double step = 1.0;
    forward_time = 0.0;
    bool accepted = false;
    Control trial(q.size());
    double J_trial = 0.0;
    for (int l = 0; l < settings.max_armijo_trials; ++l) {
      step = std::pow(settings.beta, l);
      for (std::size_t i = 0; i < q.size(); ++i)
        trial[i] = q[i] - step * g[i];
      ++rec.armijo_trials;
      J_trial = f.value(trial);
      forward_time += f.last_forward_seconds();
      if (J_trial <= J - settings.gamma * step * gn * gn) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.log.records.push_back(rec);
      if (on_record)
        on_record(rec);
      std::ostringstream msg;
      msg << "Armijo search failed after " << rec.armijo_trials << " trials at iteration " << it
          << " (J = " << J << ", |grad| = " << gn << ")";
      throw ArmijoError(msg.str());
    }
    rec.beta = step;
    result.log.records.push_back(rec);
    if (on_record)
      on_record(rec);
    q = trial;
    J = J_trial;
  }
}

} // namespace fsiopt
