#include "fsiopt/errors.hpp"
#include "fsiopt/io.hpp"
#include "fsiopt/optimize.hpp"
#include "fsiopt/problems.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>

using namespace fsiopt;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, SolverFailure = 2, VerificationFailure = 3, BadConfig = 4 };

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string output = "output";
  int vtk_every = 0;
  std::vector<double> fd_steps;
};

class RunLog {
public:
  explicit RunLog(const fs::path &path) : out_(path) {
    if (!out_)
      throw std::runtime_error("cannot write " + path.string());
    out_ << std::setprecision(8);
  }
  template <class... T> void line(const T &...parts) {
    ((out_ << parts), ...);
    out_ << '\n';
    out_.flush();
  }
  void steps(const ForwardResult &fw) {
    for (const auto &s : fw.steps) {
      line("step ", s.step, " t=", s.time, " newton_iterations=", s.newton.iterations(),
           " initial_residual=", s.newton.initial_residual, " final_residual=", s.newton.final_residual,
           " factorizations=", s.newton.factorizations, " min_J=", s.min_jacobian);
      for (const auto &it : s.newton.history)
        line("  newton ", it.iteration, " residual=", it.residual, " lambda=", it.lambda,
             " rebuilt=", it.rebuilt ? 1 : 0);
    }
  }

private:
  std::ofstream out_;
};

fs::path prepare_output(const Options &o, const Problem &problem) {
  const fs::path dir = o.output;
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << config_to_ini(problem.config());
  std::ofstream mesh(dir / "mesh.txt");
  write_mesh(mesh, problem.mesh());
  if (o.vtk_every > 0)
    fs::create_directories(dir / "vtk");
  return dir;
}

std::string snapshot_name(const char *prefix, int n) {
  std::ostringstream name;
  name << prefix << "-" << std::setw(5) << std::setfill('0') << n << ".vtk";
  return name.str();
}

void write_adjoint_snapshots(const Options &o, const fs::path &dir, const Problem &problem,
                             const AdjointResult &adjoint) {
  if (o.vtk_every <= 0)
    return;
  const double k = problem.scheme().k;
  for (std::size_t n = 1; n < adjoint.z.size(); ++n)
    if (n % static_cast<std::size_t>(o.vtk_every) == 0 || n == adjoint.z.size() - 1)
      write_vtk(dir / "vtk" / snapshot_name("adjoint", static_cast<int>(n)), problem.dofs(), adjoint.z[n],
                static_cast<double>(n) * k, false);
}

int cmd_forward(const Options &o) {
  ProblemConfig config = load_config(o.config, o.overrides);
  Problem problem(config);
  const fs::path dir = prepare_output(o, problem);
  RunLog log(dir / "run.log");
  TimeSeriesWriter series(dir / "timeseries.csv");
  const Point a = config.functional.point;
  const MarkerSet drag = config.functional.drag_markers;

  ForwardOptions fo = problem.forward_options();
  fo.observer = [&](int n, double t, std::span<const double> u) {
    series.write(point_series_row(problem.op(), u, t, a, drag));
    if (o.vtk_every > 0 && n % o.vtk_every == 0)
      write_vtk(dir / "vtk" / snapshot_name("state", n), problem.dofs(), u, t);
    if (n > 0)
      std::cerr << "step " << n << "/" << config.scheme.steps << " t=" << t << "\n";
  };
  log.line("problem ", problem_kind_name(config.kind), " dofs=", problem.dofs().n_dofs(),
           " cells=", problem.mesh().n_cells(), " q=", config.q0);
  const auto t0 = std::chrono::steady_clock::now();
  const ForwardResult fw = problem.forward(config.q0, fo);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.steps(fw);
  log.line("forward_seconds=", secs, " min_J=", fw.min_jacobian());
  const auto end = point_series_row(problem.op(), fw.trajectory.back(), config.scheme.end_time(), a, drag);
  std::cout << std::setprecision(10) << "u1_A=" << end.u1 << " u2_A=" << end.u2 << " drag=" << end.drag
            << " min_J=" << fw.min_jacobian() << "\n";
  return Ok;
}

int cmd_grad_check(const Options &o) {
  ProblemConfig config = load_config(o.config, o.overrides);
  if (!o.fd_steps.empty())
    config.fd_steps = o.fd_steps;
  Problem problem(config);
  const fs::path dir = prepare_output(o, problem);
  RunLog log(dir / "run.log");
  auto rf = problem.reduced_functional();
  const double q = config.q0;
  const double g = rf.gradient({q})[0];
  log.line("q=", q, " J=", rf.value({q}), " adjoint_gradient=", g);
  write_adjoint_snapshots(o, dir, problem, rf.last_adjoint());
  std::ofstream csv(dir / "grad_check.csv");
  csv << "h,fd_value,adjoint_value,rel_error\n" << std::setprecision(12);
  double best = std::numeric_limits<double>::infinity();
  for (double factor : config.fd_steps) {
    const double h = factor * std::abs(q);
    double fd = std::numeric_limits<double>::quiet_NaN();
    double err = std::numeric_limits<double>::quiet_NaN();
    if (q - h > 0.0) {
      try {
        fd = (rf.value({q + h}) - rf.value({q - h})) / (2 * h);
        err = std::abs(fd - g) / std::max(std::abs(fd), std::abs(g));
        best = std::min(best, err);
      } catch (const ForwardSolveError &e) {
        log.line("h=", h, " excluded: ", e.what());
      }
    } else {
      log.line("h=", h, " excluded: q - h is not a valid control");
    }
    csv << h << ',' << fd << ',' << g << ',' << err << '\n';
    std::cout << std::setprecision(6) << "h=" << h << " fd=" << fd << " adjoint=" << g
              << " rel_error=" << err << "\n";
  }
  const bool pass = best <= config.grad_check_threshold;
  log.line("min_rel_error=", best, " threshold=", config.grad_check_threshold, pass ? " PASS" : " FAIL");
  std::cout << "min_rel_error=" << best << (pass ? " PASS" : " FAIL") << "\n";
  return pass ? Ok : VerificationFailure;
}

int cmd_optimize(const Options &o) {
  ProblemConfig config = load_config(o.config, o.overrides);
  Problem problem(config);
  const fs::path dir = prepare_output(o, problem);
  RunLog log(dir / "run.log");
  auto rf = problem.reduced_functional();
  log.line("problem ", problem_kind_name(config.kind), " target=", problem.functional().target);
  rf.on_forward = [&](double q, const ForwardResult &fw) {
    log.line("forward q=", q, " min_J=", fw.min_jacobian());
    log.steps(fw);
  };
  OptimizationLog partial;
  const auto on_record = [&](const OptimizationRecord &r) {
    partial.records.push_back(r);
    std::cerr << std::setprecision(10) << "iter " << r.iteration << " J=" << r.value << " q=" << r.q[0]
              << " |g|/|g0|=" << r.grad_norm_rel << " beta=" << r.beta << "\n";
    std::ofstream csv(dir / "optimization.csv");
    partial.write_csv(csv);
  };
  try {
    const auto res = gradient_method(rf, {config.q0}, config.optimizer, on_record);
    write_adjoint_snapshots(o, dir, problem, rf.last_adjoint());
    std::ofstream(dir / "final_q.txt") << std::setprecision(17) << res.q[0] << '\n';
    log.line("stop: ", res.log.stop_reason, " q=", res.q[0]);
    std::cout << std::setprecision(12) << "q=" << res.q[0] << " (" << res.log.stop_reason << ")\n";
  } catch (const ArmijoError &e) {
    log.line("armijo failure: ", e.what());
    throw;
  }
  return Ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Monolithic ALE fluid-structure interaction: forward solves, adjoint gradients, "
               "parameter optimization"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App *sub) {
    sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.overrides, "Override section.key=value (repeatable)");
    sub->add_option("--output", o.output, "Output directory");
  };
  auto *forward = app.add_subcommand("forward", "Run the forward problem");
  common(forward);
  forward->add_option("--vtk-every", o.vtk_every, "Write a VTK snapshot every N steps");
  const char *adjoint_vtk = "Write adjoint snapshots every N steps (last gradient evaluation)";
  auto *grad = app.add_subcommand("grad-check", "Compare the adjoint gradient with finite differences");
  common(grad);
  grad->add_option("--fd-steps", o.fd_steps, "FD step factors relative to |q|")->delimiter(',');
  grad->add_option("--vtk-every", o.vtk_every, adjoint_vtk);
  auto *opt = app.add_subcommand("optimize", "Run the gradient method");
  common(opt);
  opt->add_option("--vtk-every", o.vtk_every, adjoint_vtk);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return BadConfig;
  }

  try {
    if (*forward)
      return cmd_forward(o);
    if (*grad)
      return cmd_grad_check(o);
    return cmd_optimize(o);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return BadConfig;
  } catch (const ForwardSolveError &e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return SolverFailure;
  } catch (const NewtonError &e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return SolverFailure;
  } catch (const SingularMatrixError &e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return SolverFailure;
  } catch (const ArmijoError &e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return SolverFailure;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return SolverFailure;
  }
}
