#include "fsiopt/newton.hpp"

#include "fsiopt/errors.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace fsiopt {

bool NewtonReport::monotone() const {
  double prev = initial_residual;
  for (const auto &it : history) {
    if (!(it.residual < prev))
      return false;
    prev = it.residual;
  }
  return true;
}

NewtonReport newton_solve(const NonlinearSystem &system, std::vector<double> &u,
                          const NewtonSettings &settings) {
  NewtonReport report;
  std::vector<double> r = system.residual(u);
  double norm_r = norm2(r);
  report.initial_residual = report.final_residual = norm_r;
  if (norm_r < settings.absolute_floor) {
    report.converged = true;
    return report;
  }
  const double target = std::max(settings.tolerance * norm_r, settings.absolute_floor);

  std::optional<LUFactorization> lu;
  double last_lambda = 1.0;
  double last_ratio = 1.0;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    bool rebuild = !lu || settings.always_rebuild || last_lambda < 1.0 ||
                   (last_ratio >= settings.reuse_low && last_ratio <= settings.reuse_high);
    for (;;) {
      if (rebuild) {
        lu.emplace(system.jacobian(u));
        ++report.factorizations;
      }
      std::vector<double> rhs(r.size());
      for (std::size_t i = 0; i < r.size(); ++i)
        rhs[i] = -r[i];
      const std::vector<double> du = lu->solve(rhs);

      std::vector<double> trial(u.size());
      double lambda = 1.0;
      bool accepted = false;
      std::vector<double> r_trial;
      double norm_trial = 0.0;
      for (int l = 0; l <= settings.max_backtracks; ++l) {
        lambda = std::pow(settings.backtrack, l);
        for (std::size_t i = 0; i < u.size(); ++i)
          trial[i] = u[i] + lambda * du[i];
        try {
          r_trial = system.residual(trial);
        } catch (const MeshEntanglementError &) {
          continue;
        }
        norm_trial = norm2(r_trial);
        if (norm_trial < norm_r) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (!rebuild) {
          // retry with a fresh matrix
          rebuild = true;
          continue;
        }
        std::ostringstream msg;
        msg << "line search failed at iteration " << it << " (residual " << norm_r << ")";
        throw NewtonError(NewtonError::Kind::LineSearchFailure, msg.str());
      }
      last_ratio = norm_trial / norm_r;
      last_lambda = lambda;
      u.swap(trial);
      r.swap(r_trial);
      norm_r = norm_trial;
      report.history.push_back({it, norm_r, lambda, rebuild});
      report.final_residual = norm_r;
      break;
    }
    if (norm_r <= target) {
      report.converged = true;
      return report;
    }
  }
  std::ostringstream msg;
  msg << "no convergence in " << settings.max_iterations << " iterations (residual "
      << norm_r << ", target " << target << ")";
  throw NewtonError(NewtonError::Kind::NonConvergence, msg.str());
}

} // namespace fsiopt
