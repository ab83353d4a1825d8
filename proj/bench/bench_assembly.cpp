// Serial vs OpenMP cell-parallel assembly on the FSI1 mesh.
#include "fsiopt/problems.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>

using namespace fsiopt;

namespace {

double best_of(int repeats, const std::function<void()> &f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"assembly benchmark"};
  int refinements = 1;
  int repeats = 5;
  int steps = 2;
  app.add_option("--refinements", refinements)->check(CLI::NonNegativeNumber);
  app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  app.add_option("--steps", steps, "forward steps to build a deformed state")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  auto config = load_config({}, {"problem.refinements=" + std::to_string(refinements),
                                 "time.steps=" + std::to_string(steps)});
  Problem problem(config);
  const auto fw = problem.forward(config.q0);
  const auto u = fw.trajectory.state(fw.trajectory.size() - 1);
  const auto u_old = fw.trajectory.state(fw.trajectory.size() - 2);
  const StepWeights w = config.scheme.weights(0.5);

  std::printf("cells %zu  dofs %zu  threads %d\n", problem.mesh().n_cells(),
              problem.dofs().n_dofs(), omp_get_max_threads());
  std::printf("%-10s %12s %12s %8s\n", "kernel", "serial [s]", "parallel [s]", "speedup");
  for (const char *kernel : {"residual", "jacobian"}) {
    double t[2];
    for (Execution e : {Execution::Serial, Execution::Parallel}) {
      AssemblyOptions opts;
      opts.execution = e;
      FsiOperator op(problem.dofs(), problem.op().params(), opts);
      op.set_control(config.q0);
      t[e == Execution::Parallel] = best_of(repeats, [&] {
        if (kernel[0] == 'r')
          (void)op.residual(u, u_old, w);
        else
          (void)op.jacobian(u, u_old, w);
      });
    }
    std::printf("%-10s %12.5f %12.5f %8.2f\n", kernel, t[0], t[1], t[0] / t[1]);
  }
}
