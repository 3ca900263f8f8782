#pragma once

#include <unordered_map>
#include <vector>

#include "gradlat/diagnostics.hpp"
#include "gradlat/lattice.hpp"
#include "gradlat/rng.hpp"

namespace gradlat {

// Conductance environment on the torus with the vertex measures
// u(x) = sum_{y~x} w(x,y) (total jump rate) and v(x) = sum_{y~x} 1/w(x,y).
struct Environment {
  TorusLattice lattice;
  std::vector<double> omega;  // per edge, positive
  std::vector<double> u_measure;
  std::vector<double> v_measure;
};

Environment make_environment(const TorusLattice& lat,
                             std::vector<double> omega);

// Variable-speed random walk path, tracked unwrapped on the universal cover.
// A wrap is a displacement coordinate exceeding one full period: beyond it
// the walker revisits literal copies of the environment.
struct WalkPath {
  long long start = 0;
  double horizon = 0.0;
  std::vector<double> jump_times;        // strictly increasing
  std::vector<long long> torus_vertices;  // position after each jump
  std::vector<int> cover_positions;  // (jumps+1) x dim, flattened, unwrapped
  bool wrapped = false;
};

WalkPath simulate_vsrw(const Environment& env, long long x0, double T,
                       Xoshiro256pp& rng);

// Cover displacement keys: coordinates offset-encoded 12 bits per axis.
long long encode_displacement(const int* d, int dim);

struct HeatKernelEstimate {
  std::vector<double> t_grid;
  // Per grid time: empirical P(X_t - X_0 = displacement) on the cover.
  std::vector<std::unordered_map<long long, double>> prob;
  std::vector<double> sup_p;  // per grid time
  long long walkers = 0;
  long long wrap_events = 0;
};

HeatKernelEstimate heat_kernel(const Environment& env, long long x,
                               const std::vector<double>& t_grid,
                               long long walkers, Xoshiro256pp& rng);

// Folds a cover-displacement distribution back to torus vertices around x.
std::vector<double> fold_to_torus(const TorusLattice& lat, long long x,
                                  const std::unordered_map<long long, double>& p);

// Exact torus heat kernel rows p(t, x, .) by spectral decomposition of the
// (symmetric) generator; vertex_count <= 512.
std::vector<std::vector<double>> heat_kernel_exact(
    const Environment& env, long long x, const std::vector<double>& t_grid);

// Weighted least-squares trend test on y = t^{d/2} sup_y p(t): pass iff the
// fitted slope is not positive at one-sided 95% confidence.
DiagnosticReport heat_kernel_decay_check(const std::vector<double>& t_grid,
                                         const std::vector<double>& sup_p,
                                         const std::vector<double>& se,
                                         int dim);

struct QfcltResult {
  DiagnosticReport report;
  std::vector<double> sigma;     // d x d, Cov(X_T)/T at the largest T
  std::vector<double> sigma_se;  // per entry
  long long wrap_events = 0;
};

// Cov(X_T)/T across the T grid, pooled over environments and walkers; pass
// iff the diagonal entries change by < 10% over the last doubling of T.
QfcltResult qfclt_check(const std::vector<Environment>& envs,
                        const std::vector<double>& T_grid,
                        long long walkers_per_env, std::uint64_t seed);

}  // namespace gradlat
