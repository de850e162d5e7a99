// Times the serial grid-scan kernel against the OpenMP one on a corpus
// problem and verifies they agree.  Usage: bench_scan [name] [resolution]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "ebsa/corpus.hpp"
#include "ebsa/metrics.hpp"

using namespace ebsa;

namespace {

double time_of(const char* label, ScanBest (*kernel)(const BilevelProblem&,
                                                     const GridAxes&, double),
               const BilevelProblem& prob, const GridAxes& axes, double tol,
               ScanBest* out) {
  const auto t0 = std::chrono::steady_clock::now();
  *out = kernel(prob, axes, tol);
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("  %-8s %8.3f s\n", label, dt);
  return dt;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string name = argc > 1 ? argv[1] : "qp_kink";
  const double resolution = argc > 2 ? std::atof(argv[2]) : 2e-3;

  const BilevelProblem& prob = corpus_get(name);
  GridAxes axes = make_axes(prob.box, resolution);
  std::size_t nx = 1, ny = 1;
  for (const Vector& ax : axes.x_axes) nx *= ax.size();
  for (const Vector& ax : axes.y_axes) ny *= ax.size();

  std::printf("%s: %zu x-points x %zu y-points, tol %.1e, %d thread(s)\n",
              name.c_str(), nx, ny, resolution, omp_get_max_threads());

  ScanBest serial, parallel;
  const double t_serial =
      time_of("serial", scan_grid_serial, prob, axes, resolution, &serial);
  const double t_par =
      time_of("openmp", scan_grid_openmp, prob, axes, resolution, &parallel);

  const bool same = serial.found == parallel.found &&
                    serial.x == parallel.x && serial.y == parallel.y &&
                    serial.F_val == parallel.F_val &&
                    serial.f_val == parallel.f_val;
  std::printf("  results %s, speedup %.2fx\n", same ? "identical" : "DIFFER",
              t_par > 0 ? t_serial / t_par : 0.0);
  if (serial.found)
    std::printf("  best F=%.9g at x[0]=%.6g\n", serial.F_val, serial.x[0]);
  return same ? 0 : 1;
}
