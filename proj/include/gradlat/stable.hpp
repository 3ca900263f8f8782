#pragma once

#include <vector>

#include "gradlat/quadrature.hpp"
#include "gradlat/rng.hpp"

namespace gradlat {
namespace stable {

// Angular kernel of the exact integral representation of the one-sided
// alpha-stable density,
//   U_a(phi) = [sin(a phi)/(a sin phi)]^{a/(1-a)} * sin((1-a) phi)/(a sin phi),
// positive, analytic and even on (-pi, pi), with minimum U_a(0) = (1-a)/a.
double zolotarev_u(double phi, double alpha);

struct StableParams {
  double alpha = 0.3;              // in (0, 1/2]
  int quadrature_nodes = 256;      // >= 64, resolution of the cached t-table
  double small_x_crossover = 0.0;  // 0 -> derive from the z > 50 rule

  void validate() const;
};

// Second-order Watson/Laplace correction for integrals of the form
//   int_{-pi}^{pi} exp(-N f(x)) g(x) dx
// with f, g positive, analytic, even, minimized at 0.
double watson_expand(double f0, double f2, double f4,
                     double g0, double g2, double N);

struct LogConcavityReport {
  bool pass = false;
  double max_second_difference = 0.0;  // of t -> ln f_a(e^t)
};

// Evaluator for the density f_alpha with Laplace transform exp(-lambda^alpha),
// supported on (0, infinity). Immutable after construction; safe to share
// across threads.
class StableDensity {
 public:
  explicit StableDensity(StableParams params);

  const StableParams& params() const { return params_; }
  double alpha() const { return params_.alpha; }
  double small_x_crossover() const { return params_.small_x_crossover; }

  // f_alpha(x), x > 0. Quadrature branch for x >= small_x_crossover,
  // Watson/saddle-point branch below it (z large regime).
  double eval(double x) const;

  // ln f_alpha(x) without going through eval(), usable deep in both tails.
  double log_eval(double x) const;

  // int_0^infty e^{-lambda x} f_alpha(x) dx; contract: exp(-lambda^alpha)
  // to 1e-6 relative on lambda in [0.1, 10].
  QuadResult laplace_transform(double lambda) const;

  // g(t) = d/dt ln f_alpha(e^t), via differentiation under the integral sign.
  double log_derivative_g(double t) const;

  // Same quantity by centred finite differences of log_eval; test oracle.
  double log_derivative_g_fd(double t, double h = 1e-5) const;

  // Leading small-x (t -> -infinity) asymptotic of g.
  static double g_asymptotic(double t, double alpha);

  // Ratio g(t)/g_asymptotic(t) at a probe point deep in the left tail;
  // reports the constant the asymptotic law actually carries.
  double fitted_asymptotic_constant(double t_probe = -15.0) const;

  LogConcavityReport logconcavity_check(const std::vector<double>& t_grid) const;

  // Cheap spline evaluations of ln f_alpha(e^t) and g(t), built once at
  // construction; used by the samplers and the low-dimensional oracles.
  double log_density_t(double t) const;   // ln[f_alpha(e^t)]
  double g_table(double t) const;

  // z(x) in the integral representation (the large parameter of the
  // Laplace/Watson regime): z = alpha^{1/(1-alpha)} x^{-alpha/(1-alpha)}.
  double z_of_x(double x) const;

  // Taylor data of U_alpha at 0, from the series of ln U.
  double u0() const { return u0_; }
  double u2() const { return u2_; }
  double u4() const { return u4_; }

 private:
  double angular_integral(double z, int power) const;  // int_0^pi U^p e^{-zU}
  double log_prefactor(double x) const;

  StableParams params_;
  double u0_ = 0.0, u2_ = 0.0, u4_ = 0.0;
  CubicSpline lnf_spline_;    // t -> ln f_alpha(e^t)
  CubicSpline g_spline_;      // t -> g(t)
  double table_lo_ = 0.0, table_hi_ = 0.0;
};

// One draw with Laplace transform exp(-lambda^alpha) (Kanter's construction).
double sample_stable(Xoshiro256pp& rng, double alpha);

struct TiltedSampleStats {
  long long proposals = 0;
  long long accepted = 0;
  long long slice_fallbacks = 0;
};

// One draw from the density proportional to exp(-c kappa) f_alpha(kappa),
// c >= 1. Rejection against sample_stable with acceptance exp(-c kappa)
// (expected rate exp(-c^alpha)); slice sampling on t = ln kappa
// (log-concave target) when that rate falls below 1%.
double sample_tilted_stable(Xoshiro256pp& rng, const StableDensity& sd,
                            double c, TiltedSampleStats* stats = nullptr);

}  // namespace stable
}  // namespace gradlat
