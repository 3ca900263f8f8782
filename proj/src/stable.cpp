#include "gradlat/stable.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gradlat {
namespace stable {

namespace {
constexpr double kPi = 3.14159265358979323846;
// Branch boundary: Watson expansion takes over where the large parameter z
// exceeds this, so its 1/z correction stays below a couple of percent.
constexpr double kZCrossover = 50.0;
// exp(-x) underflow guard for unnormalized integrands.
constexpr double kExpFloor = 745.0;
// Above this x the convergent power series in x^{-alpha} is used; below it
// (down to the Watson crossover) the angular quadrature.
constexpr double kSeriesCrossover = 3.0;

// Tail series f_a(x) = (1/pi) sum_{k>=1} (-1)^{k+1} Gamma(k a + 1)/k!
//                      sin(pi k a) x^{-k a - 1},
// convergent for a < 1 and numerically benign for x >= kSeriesCrossover
// (terms decrease from the first one on). Returns f and optionally
// g(ln x) = x f'/f + 1... the callers want g(t) = d/dt ln f_a(e^t) directly,
// so df accumulates sum c_k (k a + 1) x^{-k a - 1} and g = -df/f.
double tail_series(double x, double alpha, double* g_out) {
  const double lx = std::log(x);
  double f = 0.0, df = 0.0;
  double sign = 1.0;
  int tiny = 0;
  for (int k = 1; k <= 200; ++k) {
    const double ka = k * alpha;
    const double lt = std::lgamma(ka + 1.0) - std::lgamma(k + 1.0) -
                      (ka + 1.0) * lx;
    // The envelope ignores sin(pi k a), which vanishes at some k for
    // rational alpha; stopping on it would truncate the series early.
    const double envelope = std::exp(lt);
    const double term = sign * std::sin(kPi * ka) * envelope;
    f += term;
    df += term * (ka + 1.0);
    tiny = (envelope < 1e-18 * std::abs(f)) ? tiny + 1 : 0;
    if (tiny >= 2 && k > 4) break;
    sign = -sign;
  }
  f /= kPi;
  df /= kPi;
  if (g_out) *g_out = -df / f;
  return f;
}
}  // namespace

double zolotarev_u(double phi, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("zolotarev_u: alpha must be in (0,1)");
  if (!(std::abs(phi) < kPi))
    throw std::domain_error("zolotarev_u: |phi| must be < pi");
  const double a = alpha;
  const double p = std::abs(phi);
  if (p < 1e-7) return (1.0 - a) / a;  // analytic limit; O(phi^2) below 1 ulp
  const double s = std::sin(p);
  const double first = std::pow(std::sin(a * p) / (a * s), a / (1.0 - a));
  return first * std::sin((1.0 - a) * p) / (a * s);
}

void StableParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw std::domain_error("StableParams: alpha must be in (0, 1/2]");
  if (quadrature_nodes < 64)
    throw std::domain_error("StableParams: quadrature_nodes must be >= 64");
  if (small_x_crossover < 0.0)
    throw std::domain_error("StableParams: small_x_crossover must be > 0");
}

double watson_expand(double f0, double f2, double f4,
                     double g0, double g2, double N) {
  if (!(f2 > 0.0 && g0 > 0.0 && N > 0.0))
    throw std::domain_error("watson_expand: need f2 > 0, g0 > 0, N > 0");
  const double corr = -f4 / (8.0 * f2 * f2) + g2 / (2.0 * g0 * f2);
  return std::sqrt(2.0 * kPi / f2) * g0 * std::exp(-N * f0) / std::sqrt(N) *
         (1.0 + corr / N);
}

StableDensity::StableDensity(StableParams params) : params_(params) {
  params_.validate();
  const double a = params_.alpha;
  u0_ = (1.0 - a) / a;
  // Taylor data of U_a at 0 from ln U = ln u0 + A2 phi^2 + A4 phi^4 + ...,
  // with s(y) = ln(sin y / y) = -y^2/6 - y^4/180 - ...
  const double A2 = a / 2.0;
  const double A4 = -(1.0 / 180.0) *
                    (-a * (a + 1.0) * (a * a + 1.0) +
                     (a * a - 2.0 * a) * (a * a - 2.0 * a + 2.0));
  u2_ = 2.0 * A2 * u0_;
  u4_ = 24.0 * u0_ * (A4 + 0.5 * A2 * A2);

  if (params_.small_x_crossover == 0.0) {
    // x at which z(x) = kZCrossover.
    params_.small_x_crossover =
        std::pow(kZCrossover / std::pow(a, 1.0 / (1.0 - a)),
                 -(1.0 - a) / a);
  }

  // Cached table of ln f_a(e^t) and g(t) for the samplers and oracles.
  table_lo_ = -40.0;
  table_hi_ = 25.0;
  const int n = std::max(1200, params_.quadrature_nodes * 4);
  std::vector<double> ts(n), lnf(n), gs(n);
  for (int i = 0; i < n; ++i) {
    const double t = table_lo_ + (table_hi_ - table_lo_) * i / (n - 1.0);
    ts[i] = t;
    lnf[i] = log_eval(std::exp(t));
    gs[i] = log_derivative_g(t);
  }
  lnf_spline_ = CubicSpline(ts, lnf);
  g_spline_ = CubicSpline(std::move(ts), std::move(gs));
}

double StableDensity::z_of_x(double x) const {
  const double a = params_.alpha;
  return std::pow(a, 1.0 / (1.0 - a)) * std::pow(x, -a / (1.0 - a));
}

double StableDensity::log_prefactor(double x) const {
  const double a = params_.alpha;
  return std::log(a / ((1.0 - a) * kPi)) + std::log(a) / (1.0 - a) -
         std::log(x) / (1.0 - a);
}

double StableDensity::angular_integral(double z, int power) const {
  const double a = params_.alpha;
  // Scale out exp(-z u0) so the adaptive rule works on O(1) numbers.
  const double zu0 = z * u0_;
  auto integrand = [&](double phi) {
    const double u = zolotarev_u(phi, a);
    const double e = z * u - zu0;
    if (e > kExpFloor) return 0.0;
    double up = u;
    for (int k = 1; k < power; ++k) up *= u;
    return up * std::exp(-e);
  };
  QuadResult q = integrate_adaptive(integrand, 0.0, kPi, 1e-300, 1e-10);
  return q.value * std::exp(-zu0);
}

double StableDensity::eval(double x) const {
  if (!(x > 0.0)) throw std::domain_error("density_eval: x must be > 0");
  return std::exp(log_eval(x));
}

double StableDensity::log_eval(double x) const {
  if (!(x > 0.0)) throw std::domain_error("density_eval: x must be > 0");
  if (x >= kSeriesCrossover)
    return std::log(tail_series(x, params_.alpha, nullptr));
  const double z = z_of_x(x);
  const double lp = log_prefactor(x);
  if (x < params_.small_x_crossover && z > kZCrossover) {
    // Watson/saddle-point branch: the full (-pi,pi) integral is twice the
    // half-range one used elsewhere.
    const double corr = -u4_ / (8.0 * u2_ * u2_) + u2_ / (2.0 * u0_ * u2_);
    const double logI = std::log(0.5) + 0.5 * std::log(2.0 * kPi / u2_) +
                        std::log(u0_) - z * u0_ - 0.5 * std::log(z) +
                        std::log1p(corr / z);
    return lp + logI;
  }
  const double zu0 = z * u0_;
  const double a = params_.alpha;
  auto integrand = [&](double phi) {
    const double u = zolotarev_u(phi, a);
    const double e = z * u - zu0;
    return e > kExpFloor ? 0.0 : u * std::exp(-e);
  };
  QuadResult q = integrate_adaptive(integrand, 0.0, kPi, 1e-300, 1e-10);
  return lp + std::log(q.value) - zu0;
}

QuadResult StableDensity::laplace_transform(double lambda) const {
  if (!(lambda > 0.0))
    throw std::domain_error("laplace_transform: lambda must be > 0");
  const double a = params_.alpha;
  // Left cutoff where the density has underflowed, right cutoff where the
  // exponential kill makes the remainder negligible (tail mass <= 1).
  const double s_lo = std::max(
      (1.0 - a) / a *
          std::log(std::pow(a, 1.0 / (1.0 - a)) * u0_ / (kExpFloor - 25.0)),
      -600.0);
  const double s_hi = std::log(std::max(80.0 / lambda, 50.0));
  const double target = std::exp(-std::pow(lambda, a));
  auto integrand = [&](double s) {
    const double x = std::exp(s);
    const double le = log_eval(x) - lambda * x + s;  // x dx = e^s ds
    return le < -700.0 ? 0.0 : std::exp(le);
  };
  return integrate_adaptive(integrand, s_lo, s_hi, 1e-9 * target, 1e-9);
}

double StableDensity::log_derivative_g(double t) const {
  const double a = params_.alpha;
  const double c = a / (a - 1.0);
  if (t >= std::log(kSeriesCrossover)) {
    double g = 0.0;
    tail_series(std::exp(std::min(t, 600.0 / (a + 1.0))), a, &g);
    return g;
  }
  const double z = std::pow(a, 1.0 / (1.0 - a)) * std::exp(-a * t / (1.0 - a));
  if (z > kZCrossover) {
    // Watson regime: J/I = u0 + 1/(2z) + O(1/z^2).
    return 1.0 / (a - 1.0) - c * (z * u0_ + 0.5);
  }
  const double I = angular_integral(z, 1);
  const double J = angular_integral(z, 2);
  return 1.0 / (a - 1.0) - c * z * J / I;
}

double StableDensity::log_derivative_g_fd(double t, double h) const {
  return (log_eval(std::exp(t + h)) - log_eval(std::exp(t - h))) / (2.0 * h);
}

double StableDensity::g_asymptotic(double t, double alpha) {
  return std::pow(alpha, 1.0 / (1.0 - alpha)) *
         std::exp(alpha * t / (alpha - 1.0));
}

double StableDensity::fitted_asymptotic_constant(double t_probe) const {
  const double a = params_.alpha;
  // Keep the probe inside the quadrature-validated regime (z <= 45) so the
  // fit is independent of the asymptotic branch it is checking.
  const double t_z45 =
      -(1.0 - a) / a * std::log(45.0 / std::pow(a, 1.0 / (1.0 - a)));
  const double t = std::max(t_probe, t_z45);
  const double z = std::pow(a, 1.0 / (1.0 - a)) * std::exp(-a * t / (1.0 - a));
  const double I = angular_integral(z, 1);
  const double J = angular_integral(z, 2);
  const double c = a / (a - 1.0);
  const double g = 1.0 / (a - 1.0) - c * z * J / I;
  return g / g_asymptotic(t, a);
}

LogConcavityReport StableDensity::logconcavity_check(
    const std::vector<double>& t_grid) const {
  if (t_grid.size() < 3)
    throw std::domain_error("logconcavity_check: grid length must be >= 3");
  std::vector<double> lnf(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw std::domain_error("logconcavity_check: grid must be increasing");
    lnf[i] = log_eval(std::exp(t_grid[i]));
  }
  LogConcavityReport rep;
  rep.max_second_difference = -1e300;
  for (std::size_t i = 1; i + 1 < lnf.size(); ++i) {
    const double d2 = lnf[i + 1] - 2.0 * lnf[i] + lnf[i - 1];
    rep.max_second_difference = std::max(rep.max_second_difference, d2);
  }
  rep.pass = rep.max_second_difference <= 1e-8;
  return rep;
}

double StableDensity::log_density_t(double t) const {
  if (t >= table_lo_ && t <= table_hi_) return lnf_spline_(t);
  return log_eval(std::exp(std::min(t, 700.0)));
}

double StableDensity::g_table(double t) const {
  if (t >= table_lo_ && t <= table_hi_) return g_spline_(t);
  return log_derivative_g(t);
}

double sample_stable(Xoshiro256pp& rng, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("sample_stable: alpha must be in (0,1)");
  const double a = alpha;
  const double u = uniform01_pos(rng) * kPi;
  const double w = exponential(rng);
  // Kanter: A(u) = alpha^{1/(1-alpha)} U_alpha(u).
  const double A = std::pow(a, 1.0 / (1.0 - a)) * zolotarev_u(u, a);
  return std::pow(A / w, (1.0 - a) / a);
}

namespace {

// Log of the unnormalized tilted density in t = ln kappa:
//   l(t) = -c e^t + t + ln f_alpha(e^t),
// concave for alpha <= 1/2 (sum of concave terms).
double tilted_logdensity_t(const StableDensity& sd, double c, double t) {
  return -c * std::exp(std::min(t, 690.0)) + t + sd.log_density_t(t);
}

double tilted_mode(const StableDensity& sd, double c) {
  // l'(t) = -c e^t + 1 + g(t) is decreasing; bisect for its zero.
  double lo = -60.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d = -c * std::exp(mid) + 1.0 + sd.g_table(mid);
    (d > 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-10) break;
  }
  return 0.5 * (lo + hi);
}

double slice_sample_tilted(Xoshiro256pp& rng, const StableDensity& sd,
                           double c) {
  double x = tilted_mode(sd, c);
  const double w = 1.5;
  const int n_steps = 25;
  for (int step = 0; step < n_steps; ++step) {
    const double y = tilted_logdensity_t(sd, c, x) - exponential(rng);
    // Step out.
    double lo = x - w * uniform01(rng);
    double hi = lo + w;
    while (tilted_logdensity_t(sd, c, lo) > y && lo > -300.0) lo -= w;
    while (tilted_logdensity_t(sd, c, hi) > y && hi < 300.0) hi += w;
    // Shrink.
    for (int tries = 0; tries < 200; ++tries) {
      const double xn = uniform_range(rng, lo, hi);
      if (tilted_logdensity_t(sd, c, xn) > y) {
        x = xn;
        break;
      }
      (xn < x ? lo : hi) = xn;
    }
  }
  return std::exp(x);
}

}  // namespace

double sample_tilted_stable(Xoshiro256pp& rng, const StableDensity& sd,
                            double c, TiltedSampleStats* stats) {
  if (!(c >= 1.0))
    throw std::domain_error("sample_tilted_stable: c must be >= 1");
  const double a = sd.alpha();
  const double expected_acceptance = std::exp(-std::pow(c, a));
  if (expected_acceptance >= 0.01) {
    const long long cap =
        std::max<long long>(200, static_cast<long long>(20.0 / expected_acceptance));
    for (long long i = 0; i < cap; ++i) {
      const double s = sample_stable(rng, a);
      if (stats) ++stats->proposals;
      if (std::log(uniform01_pos(rng)) < -c * s) {
        if (stats) ++stats->accepted;
        return s;
      }
    }
  }
  if (stats) ++stats->slice_fallbacks;
  return slice_sample_tilted(rng, sd, c);
}

}  // namespace stable
}  // namespace gradlat
