#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradlat/quadrature.hpp"
#include "gradlat/scaling.hpp"

using namespace gradlat;

namespace {

constexpr double kPi = 3.14159265358979323846;

TestFunction dipole() {
  TestFunction f;
  f.family = TestFunction::Family::gaussian_dipole;
  f.sigma = 0.5;
  f.amplitude = 1.3;
  f.separation = {0.75, 0.0, 0.0};
  return f;
}

TestFunction bump() {
  TestFunction f;
  f.family = TestFunction::Family::laplacian_bump;
  f.sigma = 0.5;
  f.amplitude = 0.8;
  return f;
}

// Real-space |fhat(k)|^2 by brute-force product quadrature over the support.
double fhat_sq_direct(const TestFunction& f, const std::array<double, 3>& k) {
  const double R = f.support_radius();
  std::vector<double> n, w;
  gauss_legendre(48, -R, R, n, w);
  double re = 0.0, im = 0.0;
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j)
      for (int l = 0; l < 48; ++l) {
        const std::array<double, 3> x{n[i], n[j], n[l]};
        const double fx = f.value(x) * w[i] * w[j] * w[l];
        const double ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
        re += fx * std::cos(ph);
        im -= fx * std::sin(ph);
      }
  return re * re + im * im;
}

double l2_sq(const TestFunction& f) {
  return fourier_weighted_integral(
      f, [](double, const std::array<double, 3>&) { return 1.0; });
}

double green_sq(const TestFunction& f) {
  return fourier_weighted_integral(
      f, [](double rho, const std::array<double, 3>&) {
        return 1.0 / (rho * rho);
      });
}

HomogenizedMatrix diag_q(double a, double b, double c) {
  HomogenizedMatrix q;
  q.dim = 3;
  q.q = {a, 0, 0, 0, b, 0, 0, 0, c};
  q.se.assign(9, 0.0);
  return q;
}

}  // namespace

TEST_CASE("fourier transforms match direct real-space quadrature") {
  for (const TestFunction& f : {dipole(), bump()}) {
    for (const std::array<double, 3>& k :
         {std::array<double, 3>{0.9, 0.0, 0.0},
          std::array<double, 3>{0.4, -1.1, 0.7}}) {
      const double direct = fhat_sq_direct(f, k);
      CHECK(f.fhat_sq(k) == doctest::Approx(direct).epsilon(1e-8));
    }
    // mean zero
    CHECK(f.fhat_sq({0.0, 0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("parseval: fourier L2 equals real-space L2") {
  for (const TestFunction& f : {dipole(), bump()}) {
    const double R = f.support_radius();
    std::vector<double> n, w;
    gauss_legendre(48, -R, R, n, w);
    double real_l2 = 0.0;
    for (int i = 0; i < 48; ++i)
      for (int j = 0; j < 48; ++j)
        for (int l = 0; l < 48; ++l) {
          const double fx = f.value({n[i], n[j], n[l]});
          real_l2 += fx * fx * w[i] * w[j] * w[l];
        }
    CHECK(l2_sq(f) == doctest::Approx(real_l2).epsilon(1e-8));
  }
}

TEST_CASE("h_norm dilation identity") {
  const TestFunction f = dipole();
  const double ff = l2_sq(f), gg = green_sq(f);
  CHECK(h_norm(f) == doctest::Approx(std::sqrt(ff + gg)).epsilon(1e-12));
  // f_delta(x) = delta^{5/2} f(delta x) is again in the family
  const double delta = 0.25;
  TestFunction fd = f;
  fd.sigma = f.sigma / delta;
  fd.separation = {f.separation[0] / delta, 0.0, 0.0};
  fd.amplitude = f.amplitude * std::pow(delta, 2.5);
  CHECK(h_norm(fd) * h_norm(fd) ==
        doctest::Approx(delta * delta * ff + gg).epsilon(1e-9));
  // amplitude homogeneity
  TestFunction f2 = f;
  f2.amplitude *= 2.0;
  CHECK(h_norm(f2) == doctest::Approx(2.0 * h_norm(f)).epsilon(1e-12));
}

TEST_CASE("discretization: zero sum, L2 mass, support guard") {
  const TestFunction f = dipole();
  TorusLattice lat(3, 24);
  const double delta = 0.5;
  const Discretization d = discretize_test_function(f, lat, delta);
  CHECK(d.v.zero_sum_flag);
  CHECK(std::abs(vector_sum(d.v)) < 1e-12);
  // exact dipole antisymmetry makes the pre-renormalization sum tiny too
  CHECK(std::abs(d.zero_sum_correction) < 1e-8);
  // sum_x v_x^2 ~ int f_delta^2 = delta^2 (f, f)
  double vv = 0.0;
  for (double x : d.v.values) vv += x * x;
  CHECK(vv == doctest::Approx(delta * delta * l2_sq(f)).epsilon(0.05));
  CHECK_THROWS_AS(discretize_test_function(f, lat, 0.2),
                  std::invalid_argument);
}

TEST_CASE("quenched variance: constant conductance scaling and spectral oracle") {
  const TestFunction f = dipole();
  TorusLattice lat(3, 24);
  const Discretization d = discretize_test_function(f, lat, 0.5);
  std::vector<double> unit(lat.edge_count(), 1.0);
  const double qv1 = quenched_variance(lat, unit, d.v);
  const TestVector g = laplacian_green_p_spectral(lat, d.v);
  CHECK(qv1 == doctest::Approx(dot(d.v.values, g.values)).epsilon(1e-7));
  std::vector<double> scaled(lat.edge_count(), 2.5);
  CHECK(quenched_variance(lat, scaled, d.v) ==
        doctest::Approx(qv1 / 2.5).epsilon(1e-7));
}

TEST_CASE("continuum variance: scaling, rotation, Loewner order") {
  const TestFunction fb = bump();
  const double base = continuum_variance(fb, diag_q(1, 1, 1));
  CHECK(base == doctest::Approx(green_sq(fb)).epsilon(1e-12));
  CHECK(continuum_variance(fb, diag_q(2, 2, 2)) ==
        doctest::Approx(base / 2.0).epsilon(1e-12));
  // radial |fhat|^2: permuting the axes of q changes nothing
  CHECK(continuum_variance(fb, diag_q(2.0, 1.5, 1.2)) ==
        doctest::Approx(continuum_variance(fb, diag_q(1.2, 2.0, 1.5)))
            .epsilon(1e-10));
  // q1 <= q2 in the Loewner order pushes the variance down
  CHECK(continuum_variance(fb, diag_q(2.0, 1.5, 1.2)) < base);
  HomogenizedMatrix bad = diag_q(1, 1, -0.5);
  CHECK_THROWS_AS(continuum_variance(fb, bad), std::invalid_argument);
  CHECK(!bad.positive_definite());
  CHECK(diag_q(1, 2, 3).positive_definite());
}

TEST_CASE("estimate_q on a constant environment gives w * identity") {
  TorusLattice lat(3, 8);
  const double w = 1.5;
  std::vector<Environment> envs{
      make_environment(lat, std::vector<double>(lat.edge_count(), w))};
  const HomogenizedMatrix q = estimate_q(envs, 4.0, 4000, 99);
  CHECK(q.dim == 3);
  CHECK(q.positive_definite());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double target = (i == j) ? w : 0.0;
      CHECK(std::abs(q.q[i * 3 + j] - target) < 3.5 * q.se[i * 3 + j]);
    }
}

TEST_CASE("scaling limit and characteristic function verdict logic") {
  // clean Cauchy sequence converging to 1.0
  std::vector<ScalingPoint> pts{{0.5, 1.40, 0.001},
                                {0.25, 1.10, 0.001},
                                {0.125, 1.02, 0.001}};
  DiagnosticReport r = scaling_limit_check(pts, 1.0, 0.002);
  CHECK(r.verdict == Verdict::pass);
  // increments shrink by only 10%: fail
  pts[2].mean = 1.10 - 0.27;
  r = scaling_limit_check(pts, 1.0, 0.002);
  CHECK(r.verdict == Verdict::fail);
  // non-monotone increments: inconclusive
  pts[2].mean = 1.60;
  r = scaling_limit_check(pts, 1.0, 0.002);
  CHECK(r.verdict == Verdict::inconclusive);
  // converged but to the wrong value: fail
  pts[2].mean = 1.02;
  r = scaling_limit_check(pts, 2.0, 0.002);
  CHECK(r.verdict == Verdict::fail);

  std::vector<double> qv(200, 0.8);  // exp(-0.4) exactly, zero spread
  CHECK(char_function_check(qv, 0.8, 1e-6).verdict == Verdict::pass);
  CHECK(char_function_check(qv, 1.6, 1e-6).verdict == Verdict::fail);
  CHECK(char_function_check({0.8, 0.8}, 0.8, 1e-6).verdict ==
        Verdict::inconclusive);
}
