#pragma once

#include <array>
#include <functional>
#include <vector>

#include "gradlat/diagnostics.hpp"
#include "gradlat/lattice.hpp"
#include "gradlat/rcm.hpp"

namespace gradlat {

// Mean-zero test functions on R^3 with closed-form Fourier transforms.
// gaussian_dipole: A [G(x) - G(x - s)] with G(x) = exp(-|x|^2 / (2 sigma^2)),
// laplacian_bump:  A (Laplacian G)(x).
// Both have fhat(0) = 0, so integrals against |k|^{-2} weights stay finite.
struct TestFunction {
  enum class Family { gaussian_dipole, laplacian_bump };
  Family family = Family::gaussian_dipole;
  double sigma = 1.0;
  double amplitude = 1.0;
  std::array<double, 3> separation{1.5, 0.0, 0.0};  // dipole only

  // Effective (truncation) radius: the Gaussian tails below ~1e-14.
  double support_radius() const;
  double value(const std::array<double, 3>& x) const;
  double fhat_sq(const std::array<double, 3>& k) const;  // |fhat(k)|^2
};

// (2 pi)^{-3} int |fhat(k)|^2 weight(|k|, k) d^3k by a log-radial x spherical
// product Gauss rule.
double fourier_weighted_integral(
    const TestFunction& f,
    const std::function<double(double, const std::array<double, 3>&)>& weight);

// [(f,f) + (f, (-Delta)^{-1} f)]^{1/2}.
double h_norm(const TestFunction& f);

struct HomogenizedMatrix {
  int dim = 3;
  std::vector<double> q;   // dim x dim, row-major
  std::vector<double> se;  // per entry
  long long walkers = 0;
  double horizon = 0.0;

  bool positive_definite() const;
};

// q = (1/2) Cov(X_T)/T from VSRW simulation over the environment ensemble.
HomogenizedMatrix estimate_q(const std::vector<Environment>& envs, double T,
                             long long walkers_per_env, std::uint64_t seed);

// (f, (-Q)^{-1} f) = (2 pi)^{-3} int |fhat|^2 / (k.qk) d^3k.
double continuum_variance(const TestFunction& f, const HomogenizedMatrix& q);

// Cell averages of f_delta(x) = delta^{d/2+1} f(delta x) on the torus
// centered at N/2, renormalized to exact zero sum.
struct Discretization {
  TestVector v;
  double zero_sum_correction = 0.0;  // pre-renormalization total
};
Discretization discretize_test_function(const TestFunction& f,
                                        const TorusLattice& lat, double delta);

// (f_delta, (-L^omega)^{-1} f_delta) with the conductances omega as edge
// weights (the conditional-covariance convention: omega = 2 beta e^t makes
// -L^omega equal 2 D(t) at mass 0).
double quenched_variance(const TorusLattice& lat,
                         const std::vector<double>& omega,
                         const TestVector& v_delta, double tol = 1e-9);
double quenched_variance(const TorusLattice& lat,
                         const std::vector<double>& omega,
                         const TestFunction& f, double delta,
                         double tol = 1e-9);

// ||phi(f)||_{L^2} / ||f||_H from a chain estimate of <(v_f . phi)^2>.
DiagnosticReport regularity_check(const ObservableStats& phi_f_sq,
                                  double hnorm);
DiagnosticReport regularity_family_stability(const std::vector<double>& ratios);

struct ScalingPoint {
  double delta = 0.0;
  double mean = 0.0;  // ensemble-averaged quenched variance
  double se = 0.0;
};

// Cauchy trend along the delta ladder (increments shrink >= 30% per halving)
// plus agreement of the finest point with the continuum value.
DiagnosticReport scaling_limit_check(std::vector<ScalingPoint> points,
                                     double continuum_value,
                                     double continuum_rel_err,
                                     double agree_tol = 0.15);

// Characteristic-function prong: ensemble mean of exp(-qv/2) against
// exp(-continuum/2) (each conditional law is exactly Gaussian).
DiagnosticReport char_function_check(const std::vector<double>& qv_samples,
                                     double continuum_value,
                                     double continuum_rel_err);

}  // namespace gradlat
