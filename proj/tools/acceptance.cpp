// Acceptance checks. One PASS/FAIL line per criterion; details go to stderr.
#include "fsiopt/errors.hpp"
#include "fsiopt/optimize.hpp"
#include "fsiopt/problems.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <string>

using namespace fsiopt;

namespace {

constexpr double C1_THRESHOLD = 1e-3;
constexpr double C2_J0_LOW = 1.20e11, C2_J0_HIGH = 1.23e11;
constexpr double C2_Q1_LOW = 4.90e5, C2_Q1_HIGH = 5.00e5;
// q1 is compared at the three significant digits of the stated bound
constexpr double C2_Q1_PRECISION = 5e-4;
constexpr double C2_REL_DISTANCE = 1e-3;
constexpr int C2_ITERATIONS = 6;
constexpr double C3_LOW = 0.88, C3_HIGH = 0.92;
constexpr int C3_ITERATIONS = 5;
constexpr int C4_MAX_NEWTON = 10;
constexpr double C5_THRESHOLD = 1e-5;
constexpr double C7_BE_LOW = 1.7, C7_BE_HIGH = 2.3;
constexpr double C7_CN_LOW = 3.3, C7_CN_HIGH = 4.7;
constexpr double FLAP_TARGET = 5e6;
constexpr double FLAP_REL_DISTANCE = 1e-2;
constexpr int FLAP_ITERATIONS = 10;

int failures = 0;

void report(const std::string &id, bool pass, const std::string &detail) {
  std::printf("[%s] %s %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass)
    ++failures;
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ForwardStats {
  int forwards = 0;
  int steps = 0;
  int max_newton = 0;
  bool all_monotone = true;
  bool all_converged = true;
  double min_jacobian = std::numeric_limits<double>::infinity();
  double max_target_ratio = 0.0; // final residual / (1e-8 R0)
  int floor_steps = 0;            // stopped by the absolute floor, not by 1e-8 R0

  void add(const ForwardResult &fw) {
    ++forwards;
    for (const auto &s : fw.steps) {
      ++steps;
      max_newton = std::max(max_newton, s.newton.iterations());
      all_monotone = all_monotone && s.newton.monotone();
      all_converged = all_converged && s.newton.converged;
      if (s.newton.initial_residual > 0.0) {
        const double ratio = s.newton.final_residual / (1e-8 * s.newton.initial_residual);
        max_target_ratio = std::max(max_target_ratio, ratio);
        floor_steps += ratio > 1.0;
      }
    }
    min_jacobian = std::min(min_jacobian, fw.min_jacobian());
  }
};

bool armijo_holds(const OptimizationLog &log, double gamma, int &checked) {
  bool ok = true;
  for (std::size_t i = 0; i + 1 < log.records.size(); ++i) {
    const auto &a = log.records[i];
    const auto &b = log.records[i + 1];
    ok = ok && b.value <= a.value - gamma * a.beta * a.grad_norm * a.grad_norm;
    ++checked;
  }
  return ok;
}

void print_log(const OptimizationLog &log) {
  for (const auto &r : log.records)
    std::fprintf(stderr, "  iter %d J=%.10e q=%.15e grad=%.4e grad_rel=%.4e beta=%g trials=%d\n",
                 r.iteration, r.value, r.q[0], r.grad_norm, r.grad_norm_rel, r.beta, r.armijo_trials);
  std::fprintf(stderr, "  stop: %s\n", log.stop_reason.c_str());
}

struct OptimizationRun {
  OptimizationLog log;
  ForwardStats stats;
  double gamma = 0.0;
};

OptimizationRun optimize(const std::vector<std::string> &overrides) {
  Problem problem(load_config({}, overrides));
  auto rf = problem.reduced_functional();
  OptimizationRun run;
  rf.on_forward = [&](double, const ForwardResult &fw) { run.stats.add(fw); };
  const auto &settings = problem.config().optimizer;
  run.gamma = settings.gamma;
  run.log = gradient_method(rf, {problem.config().q0}, settings).log;
  print_log(run.log);
  return run;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Problem problem(load_config({}, {"time.scheme=BE", "time.k=1", "time.steps=3", "control.q0=4e5",
                                   "functional.alpha=0"}));
  auto rf = problem.reduced_functional();
  const double q = problem.config().q0;
  const double g = rf.gradient({q})[0];
  double best = std::numeric_limits<double>::infinity();
  double best_h = 0.0;
  for (double factor : {1e-2, 1e-1, 1.0, 10.0}) {
    const double h = factor * std::abs(q);
    if (q - h <= 0.0) {
      std::fprintf(stderr, "  h=%g excluded: q - h is not a valid control\n", h);
      continue;
    }
    const double fd = (rf.value({q + h}) - rf.value({q - h})) / (2 * h);
    const double err = std::abs(fd - g) / std::max(std::abs(fd), std::abs(g));
    std::fprintf(stderr, "  h=%g fd=%.10e adjoint=%.10e rel_error=%.3e\n", h, fd, g, err);
    if (err < best) {
      best = err;
      best_h = h;
    }
  }
  report("C1 adjoint gradient vs central FD", best <= C1_THRESHOLD,
         fmt("best rel_error=%.3e at h=%g (threshold %g) %.1fs", best, best_h, C1_THRESHOLD,
             seconds_since(t0)));
}

void criteria2to4(ForwardStats &validity, OptimizationLog &log2, OptimizationLog &log3,
                  double &gamma) {
  auto t0 = std::chrono::steady_clock::now();
  std::fprintf(stderr, "criterion 2 run\n");
  auto r2 = optimize({"functional.alpha=1", "functional.q_ref=5e5", "control.q0=5000",
                      "optimizer.max_iterations=" + std::to_string(C2_ITERATIONS),
                      "optimizer.tolerance=0", "optimizer.relative_tolerance=0"});
  const auto &rec = r2.log.records;
  const double j0 = rec.at(0).value;
  const double q1 = rec.size() > 1 ? rec[1].q[0] : std::numeric_limits<double>::quiet_NaN();
  int reached = -1;
  for (const auto &r : rec)
    if (reached < 0 && std::abs(r.q[0] - 5e5) / 5e5 < C2_REL_DISTANCE)
      reached = r.iteration;
  const bool j0_ok = j0 >= C2_J0_LOW && j0 <= C2_J0_HIGH;
  const bool q1_ok = q1 >= C2_Q1_LOW * (1 - C2_Q1_PRECISION) && q1 <= C2_Q1_HIGH * (1 + C2_Q1_PRECISION);
  const bool reach_ok = reached >= 0 && reached <= C2_ITERATIONS;
  report("C2 regularization-dominated optimization (alpha=1, q_d=5e5, q0=5000)",
         j0_ok && q1_ok && reach_ok,
         fmt("J(q0)=%.6e in [%.2e,%.2e]: %s; q1=%.6f in [%.2e,%.2e]: %s; |q-5e5|/5e5<%g at iteration %d: %s "
             "%.1fs",
             j0, C2_J0_LOW, C2_J0_HIGH, j0_ok ? "yes" : "no", q1, C2_Q1_LOW, C2_Q1_HIGH,
             q1_ok ? "yes" : "no", C2_REL_DISTANCE, reached, reach_ok ? "yes" : "no",
             seconds_since(t0)));

  const auto &s = r2.stats;
  const double floor = default_config(ProblemKind::FSI1).newton.absolute_floor;
  report("C4 Newton performance in criterion-2 forward solves",
         s.all_converged && s.all_monotone && s.max_newton <= C4_MAX_NEWTON,
         fmt("%d forwards, %d steps, max iterations %d (limit %d), monotone %s, converged %s; "
             "stopping test max(1e-8 R0, floor %g): %d steps ended at the floor "
             "(max final/(1e-8 R0)=%.3g)",
             s.forwards, s.steps, s.max_newton, C4_MAX_NEWTON, s.all_monotone ? "yes" : "no",
             s.all_converged ? "yes" : "no", floor, s.floor_steps, s.max_target_ratio));

  t0 = std::chrono::steady_clock::now();
  std::fprintf(stderr, "criterion 3 run\n");
  auto r3 = optimize({"functional.alpha=0.1", "functional.q_ref=1e6", "control.q0=5000",
                      "optimizer.max_iterations=" + std::to_string(C3_ITERATIONS),
                      "optimizer.tolerance=0", "optimizer.relative_tolerance=0"});
  const auto &rec3 = r3.log.records;
  const double g1 = rec3.size() > 1 ? rec3[1].grad_norm_rel : std::numeric_limits<double>::quiet_NaN();
  bool monotone = true;
  for (std::size_t i = 1; i < rec3.size(); ++i)
    monotone = monotone && rec3[i].grad_norm_rel < rec3[i - 1].grad_norm_rel;
  std::string trace;
  for (const auto &r : rec3)
    trace += fmt("%s%.5f", trace.empty() ? "" : ",", r.grad_norm_rel);
  report("C3 normalized gradient trend (alpha=0.1, q_d=1e6, q0=5000)",
         g1 >= C3_LOW && g1 <= C3_HIGH && monotone,
         fmt("after iteration 1: %.5f in [%.2f,%.2f]; monotone decreasing %s [%s] %.1fs", g1, C3_LOW,
             C3_HIGH, monotone ? "yes" : "no", trace.c_str(), seconds_since(t0)));

  validity.forwards += r2.stats.forwards + r3.stats.forwards;
  validity.min_jacobian = std::min({validity.min_jacobian, r2.stats.min_jacobian, r3.stats.min_jacobian});
  log2 = r2.log;
  log3 = r3.log;
  gamma = r2.gamma;
}

std::vector<double> random_state(const DofMap &dofs, std::mt19937 &rng, double vs, double us,
                                 double ps) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(dofs.n_dofs());
  for (std::size_t i = 0; i < u.size(); ++i) {
    switch (dofs.field_of(static_cast<int>(i))) {
    case Field::Velocity:
      u[i] = vs * dist(rng);
      break;
    case Field::Displacement:
      u[i] = us * dist(rng);
      break;
    case Field::Auxiliary:
      u[i] = 10 * us * dist(rng);
      break;
    case Field::Pressure:
      u[i] = ps * dist(rng);
      break;
    }
  }
  return u;
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  auto config = load_config({}, {"problem.name=FSI1", "time.scheme=CNs", "time.k=0.1"});
  Problem problem(config);
  const DofMap &dofs = problem.dofs();
  const FsiOperator &op = problem.op();
  const StepWeights w = config.scheme.weights(0.5);
  std::mt19937 rng(20261019);
  double worst = 0.0;
  int checked = 0;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> u, uo;
    do {
      u = random_state(dofs, rng, 0.3, 2e-3, 10.0);
      uo = random_state(dofs, rng, 0.3, 2e-3, 10.0);
      dofs.apply_constraints(u, 0.2);
      dofs.apply_constraints(uo, 0.2);
    } while (!(op.min_jacobian(u) > 0.0));
    const auto J = op.jacobian(u, uo, w);
    for (int d = 0; d < 5; ++d) {
      auto dir = random_state(dofs, rng, 0.3, 2e-3, 10.0);
      dofs.zero_constrained(dir);
      const double h = 1e-6 * norm2(u) / norm2(dir);
      std::vector<double> jd(dir.size()), up = u, um = u;
      J.multiply(dir, jd);
      dofs.zero_constrained(jd);
      axpy(h, dir, up);
      axpy(-h, dir, um);
      const auto rp = op.residual(up, uo, w);
      const auto rm = op.residual(um, uo, w);
      std::vector<double> diff(jd.size());
      for (std::size_t i = 0; i < jd.size(); ++i)
        diff[i] = jd[i] - (rp[i] - rm[i]) / (2 * h);
      worst = std::max(worst, norm2(diff) / norm2(jd));
      ++checked;
    }
  }
  report("C5 Jacobian vs central FD of the residual", worst <= C5_THRESHOLD,
         fmt("%d state/direction pairs, worst rel_error=%.3e (threshold %g) %.1fs", checked, worst,
             C5_THRESHOLD, seconds_since(t0)));
}

double flapping_min_jacobian() {
  const auto t0 = std::chrono::steady_clock::now();
  auto config = load_config({}, {"problem.name=Flapping", "time.steps=200"});
  Problem problem(config);
  const auto fw = problem.forward(config.q0);
  std::fprintf(stderr, "  flapping 200 steps: min J=%.6f %.1fs\n", fw.min_jacobian(), seconds_since(t0));
  return fw.min_jacobian();
}

double beam_tip(const std::string &scheme, double k, int steps) {
  auto config = load_config({}, {"problem.name=Beam", "time.scheme=" + scheme,
                                 "time.k=" + fmt("%.17g", k), "time.steps=" + std::to_string(steps)});
  Problem problem(config);
  const auto fw = problem.forward(config.q0);
  return evaluate_at_point(problem.dofs(), fw.trajectory.back(), Field::Displacement,
                           config.functional.point)
      .y;
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const double k0 = 0.02;
  const int n0 = 25;
  std::string detail;
  bool pass = true;
  for (const auto &[scheme, low, high] :
       {std::tuple{"BE", C7_BE_LOW, C7_BE_HIGH}, std::tuple{"CNs", C7_CN_LOW, C7_CN_HIGH}}) {
    const double ref = beam_tip(scheme, k0 / 16, n0 * 16);
    const double e1 = std::abs(beam_tip(scheme, k0, n0) - ref);
    const double e2 = std::abs(beam_tip(scheme, k0 / 2, n0 * 2) - ref);
    const double ratio = e1 / e2;
    const bool ok = ratio >= low && ratio <= high;
    pass = pass && ok;
    detail += fmt("%s ratio=%.3f in [%.1f,%.1f] (errors %.3e, %.3e); ", scheme, ratio, low, high, e1, e2);
  }
  report("C7 time-integrator order on the solid-only beam", pass,
         detail + fmt("%.1fs", seconds_since(t0)));
}

void flapping_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  std::fprintf(stderr, "flapping optimization run\n");
  auto run = optimize({"problem.name=Flapping", "time.steps=100", "functional.alpha=1",
                       "functional.q_ref=5e6", "control.q0=2e7",
                       "optimizer.max_iterations=" + std::to_string(FLAP_ITERATIONS)});
  const auto &rec = run.log.records;
  // q must move toward the target: the sign of each step matches sign(5e6 - q0)
  const double direction = FLAP_TARGET - rec.front().q[0];
  bool monotone = true;
  int reached = -1;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (i > 0)
      monotone = monotone && (rec[i].q[0] - rec[i - 1].q[0]) * direction >= 0.0;
    if (reached < 0 && std::abs(rec[i].q[0] - FLAP_TARGET) / FLAP_TARGET < FLAP_REL_DISTANCE)
      reached = rec[i].iteration;
  }
  report("F  flapping trend (alpha=1, q_d=5e6, q0=2e7, 100 steps)",
         monotone && reached >= 0 && reached <= FLAP_ITERATIONS && run.stats.min_jacobian > 0.0,
         fmt("q monotone toward 5e6 %s; within %g at iteration %d; final q=%.15g (%s); min J=%.4f %.1fs",
             monotone ? "yes" : "no", FLAP_REL_DISTANCE, reached, rec.back().q[0],
             run.log.stop_reason.c_str(), run.stats.min_jacobian, seconds_since(t0)));
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"acceptance checks"};
  std::vector<std::string> only;
  app.add_option("--only", only, "run a subset: 1,2,3,4,5,6,7,8,F (2,3,4,6,8 share runs)")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<std::string> sel(only.begin(), only.end());
  auto want = [&](std::initializer_list<const char *> ids) {
    if (sel.empty())
      return true;
    return std::any_of(ids.begin(), ids.end(), [&](const char *id) { return sel.count(id) > 0; });
  };

  try {
    if (want({"1"}))
      criterion1();
    ForwardStats validity;
    OptimizationLog log2, log3;
    double gamma = 0.0;
    const bool optimization_runs = want({"2", "3", "4", "6", "8"});
    if (optimization_runs)
      criteria2to4(validity, log2, log3, gamma);
    if (want({"5"}))
      criterion5();
    if (want({"6"})) {
      const double flap = flapping_min_jacobian();
      report("C6 mesh validity",
             validity.min_jacobian > 0.0 && flap > 0.0,
             fmt("min J over %d optimization forwards=%.6f; 200-step flapping run=%.6f",
                 validity.forwards, validity.min_jacobian, flap));
    }
    if (want({"7"}))
      criterion7();
    if (optimization_runs && want({"8"})) {
      int checked = 0;
      const bool ok = armijo_holds(log2, gamma, checked) && armijo_holds(log3, gamma, checked);
      report("C8 Armijo inequality at accepted steps", ok,
             fmt("%d accepted steps checked with gamma=%g", checked, gamma));
    }
    if (want({"F"}))
      flapping_trend();
  } catch (const std::exception &e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s: %d failure(s)\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
