#include "gradlat/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "gradlat/quadrature.hpp"

namespace gradlat {

namespace {

constexpr double kPi = 3.14159265358979323846;

double norm3(const std::array<double, 3>& x) {
  return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

std::string fmt_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double TestFunction::support_radius() const {
  double r = 8.0 * sigma;
  if (family == Family::gaussian_dipole) r += norm3(separation);
  return r;
}

double TestFunction::value(const std::array<double, 3>& x) const {
  const double s2 = sigma * sigma;
  if (family == Family::gaussian_dipole) {
    double ra2 = 0.0, rb2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      ra2 += x[i] * x[i];
      const double d = x[i] - separation[i];
      rb2 += d * d;
    }
    return amplitude * (std::exp(-ra2 / (2.0 * s2)) - std::exp(-rb2 / (2.0 * s2)));
  }
  double r2 = 0.0;
  for (int i = 0; i < 3; ++i) r2 += x[i] * x[i];
  return amplitude * (r2 / (s2 * s2) - 3.0 / s2) * std::exp(-r2 / (2.0 * s2));
}

double TestFunction::fhat_sq(const std::array<double, 3>& k) const {
  const double s2 = sigma * sigma;
  const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  const double ghat = std::pow(2.0 * kPi * s2, 1.5) * std::exp(-s2 * k2 / 2.0);
  const double a2 = amplitude * amplitude * ghat * ghat;
  if (family == Family::gaussian_dipole) {
    const double ks =
        k[0] * separation[0] + k[1] * separation[1] + k[2] * separation[2];
    return a2 * 2.0 * (1.0 - std::cos(ks));
  }
  return a2 * k2 * k2;
}

double fourier_weighted_integral(
    const TestFunction& f,
    const std::function<double(double, const std::array<double, 3>&)>& weight) {
  const int n_rho = 160, n_mu = 32, n_phi = 32;
  std::vector<double> sn, sw, mn, mw;
  const double lo = std::log(1e-5 / f.sigma), hi = std::log(14.0 / f.sigma);
  gauss_legendre(n_rho, lo, hi, sn, sw);
  gauss_legendre(n_mu, -1.0, 1.0, mn, mw);
  const double dphi = 2.0 * kPi / n_phi;
  double total = 0.0;
  for (int ir = 0; ir < n_rho; ++ir) {
    const double rho = std::exp(sn[ir]);
    double shell = 0.0;
    for (int im = 0; im < n_mu; ++im) {
      const double mu = mn[im], st = std::sqrt(1.0 - mu * mu);
      double ring = 0.0;
      for (int ip = 0; ip < n_phi; ++ip) {
        const double ph = dphi * ip;
        const std::array<double, 3> k{rho * st * std::cos(ph),
                                      rho * st * std::sin(ph), rho * mu};
        ring += f.fhat_sq(k) * weight(rho, k);
      }
      shell += mw[im] * ring * dphi;
    }
    // rho^2 surface Jacobian and rho from the log substitution
    total += sw[ir] * rho * rho * rho * shell;
  }
  return total / std::pow(2.0 * kPi, 3);
}

double h_norm(const TestFunction& f) {
  const double sq = fourier_weighted_integral(
      f, [](double rho, const std::array<double, 3>&) {
        return 1.0 + 1.0 / (rho * rho);
      });
  return std::sqrt(sq);
}

bool HomogenizedMatrix::positive_definite() const {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = q[static_cast<size_t>(i) * dim + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff() > 0.0;
}

HomogenizedMatrix estimate_q(const std::vector<Environment>& envs, double T,
                             long long walkers_per_env, std::uint64_t seed) {
  if (envs.empty()) throw std::invalid_argument("estimate_q: no environments");
  QfcltResult r = qfclt_check(envs, {T / 2.0, T}, walkers_per_env, seed);
  HomogenizedMatrix h;
  h.dim = envs.front().lattice.dim();
  h.walkers = walkers_per_env * static_cast<long long>(envs.size());
  h.horizon = T;
  h.q.resize(r.sigma.size());
  h.se.resize(r.sigma_se.size());
  for (size_t i = 0; i < r.sigma.size(); ++i) {
    h.q[i] = 0.5 * r.sigma[i];
    h.se[i] = 0.5 * r.sigma_se[i];
  }
  return h;
}

double continuum_variance(const TestFunction& f, const HomogenizedMatrix& q) {
  if (q.dim != 3)
    throw std::invalid_argument("continuum_variance: need a 3x3 matrix");
  if (!q.positive_definite())
    throw std::invalid_argument("continuum_variance: q not positive definite");
  const std::vector<double>& m = q.q;
  return fourier_weighted_integral(
      f, [&m](double, const std::array<double, 3>& k) {
        double kqk = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            kqk += k[i] * m[static_cast<size_t>(i) * 3 + j] * k[j];
        return 1.0 / kqk;
      });
}

Discretization discretize_test_function(const TestFunction& f,
                                        const TorusLattice& lat, double delta) {
  if (lat.dim() != 3)
    throw std::invalid_argument("discretize_test_function: need dim 3");
  if (!(delta > 0.0))
    throw std::invalid_argument("discretize_test_function: delta must be > 0");
  const double radius = f.support_radius() / delta;
  if (radius > 0.5 * lat.side())
    throw std::invalid_argument(
        "discretize_test_function: support exceeds half the torus side");
  const long long nv = lat.vertex_count();
  const int half = lat.side() / 2;
  std::vector<double> gn, gw;
  gauss_legendre(3, -0.5, 0.5, gn, gw);
  const double amp = std::pow(delta, 2.5);  // delta^{d/2+1}, d = 3
  std::vector<double> vals(static_cast<size_t>(nv), 0.0);
  for (long long v = 0; v < nv; ++v) {
    const std::vector<int> c = lat.coords(v);
    const std::array<double, 3> z{static_cast<double>(c[0] - half),
                                  static_cast<double>(c[1] - half),
                                  static_cast<double>(c[2] - half)};
    const double dist = norm3(z);
    if (dist > radius + 1.0) continue;
    double cell = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          const std::array<double, 3> y{delta * (z[0] + gn[i]),
                                        delta * (z[1] + gn[j]),
                                        delta * (z[2] + gn[l])};
          cell += gw[i] * gw[j] * gw[l] * f.value(y);
        }
    vals[static_cast<size_t>(v)] = amp * cell;
  }
  Discretization out;
  double total = 0.0;
  for (double x : vals) total += x;
  out.zero_sum_correction = total;
  out.v = make_zero_sum(std::move(vals));
  return out;
}

double quenched_variance(const TorusLattice& lat,
                         const std::vector<double>& omega,
                         const TestVector& v_delta, double tol) {
  EdgeWeightedOperator op{lat, omega, 0.0};
  op.validate();
  TestVector u = solve_green(op, v_delta, tol);
  return dot(v_delta.values, u.values);
}

double quenched_variance(const TorusLattice& lat,
                         const std::vector<double>& omega,
                         const TestFunction& f, double delta, double tol) {
  return quenched_variance(lat, omega,
                           discretize_test_function(f, lat, delta).v, tol);
}

DiagnosticReport regularity_check(const ObservableStats& phi_f_sq,
                                  double hnorm) {
  DiagnosticReport rep;
  rep.name = "regularity";
  rep.bound_or_target = hnorm;
  if (!(hnorm > 0.0) || !std::isfinite(phi_f_sq.mean) || phi_f_sq.mean <= 0.0) {
    rep.verdict = Verdict::fail;
    return rep;
  }
  const double l2 = std::sqrt(phi_f_sq.mean);
  rep.estimate = l2 / hnorm;
  rep.std_error = phi_f_sq.std_error / (2.0 * l2 * hnorm);
  rep.verdict = (phi_f_sq.std_error > 0.5 * phi_f_sq.mean)
                    ? Verdict::inconclusive
                    : Verdict::pass;
  return rep;
}

DiagnosticReport regularity_family_stability(
    const std::vector<double>& ratios) {
  DiagnosticReport rep;
  rep.name = "regularity_family";
  rep.bound_or_target = 3.0;
  if (ratios.size() < 2) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  double lo = ratios.front(), hi = ratios.front();
  bool ok = true;
  for (double r : ratios) {
    if (!std::isfinite(r) || r <= 0.0) ok = false;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  rep.estimate = ok ? hi / lo : std::numeric_limits<double>::infinity();
  rep.verdict = (ok && rep.estimate < 3.0) ? Verdict::pass : Verdict::fail;
  return rep;
}

DiagnosticReport scaling_limit_check(std::vector<ScalingPoint> points,
                                     double continuum_value,
                                     double continuum_rel_err,
                                     double agree_tol) {
  if (points.size() < 3)
    throw std::invalid_argument("scaling_limit_check: need >= 3 delta values");
  std::sort(points.begin(), points.end(),
            [](const ScalingPoint& a, const ScalingPoint& b) {
              return a.delta > b.delta;
            });
  DiagnosticReport rep;
  rep.name = "scaling_limit";
  const ScalingPoint& fine = points.back();
  rep.estimate = fine.mean;
  rep.std_error = fine.se;
  rep.bound_or_target = continuum_value;
  const size_t n = points.size();
  const double d1 = std::abs(points[n - 2].mean - points[n - 3].mean);
  const double d2 = std::abs(points[n - 1].mean - points[n - 2].mean);
  const double se12 = std::hypot(points[n - 3].se, points[n - 2].se);
  const double se23 = std::hypot(points[n - 2].se, points[n - 1].se);
  rep.metadata["increment_coarse"] = fmt_num(d1);
  rep.metadata["increment_fine"] = fmt_num(d2);
  if (d2 > d1 + 3.0 * (se12 + se23)) {
    rep.metadata["reason"] = "increments not monotone";
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  const bool shrink_ok = d2 <= 0.7 * d1 + 3.0 * se23;
  const double agree_gap = std::abs(fine.mean - continuum_value);
  const double agree_slack = agree_tol * std::abs(continuum_value) +
                             3.0 * fine.se +
                             continuum_rel_err * std::abs(continuum_value);
  const bool agree_ok = agree_gap <= agree_slack;
  rep.metadata["continuum_gap"] = fmt_num(agree_gap);
  if (!shrink_ok) rep.metadata["reason"] = "increments shrink by < 30%";
  if (!agree_ok) rep.metadata["reason"] = "finest delta misses the continuum";
  rep.verdict = (shrink_ok && agree_ok) ? Verdict::pass : Verdict::fail;
  return rep;
}

DiagnosticReport char_function_check(const std::vector<double>& qv_samples,
                                     double continuum_value,
                                     double continuum_rel_err) {
  DiagnosticReport rep;
  rep.name = "char_function";
  rep.bound_or_target = std::exp(-0.5 * continuum_value);
  if (qv_samples.size() < 8) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  double mean = 0.0;
  for (double s : qv_samples) mean += std::exp(-0.5 * s);
  mean /= static_cast<double>(qv_samples.size());
  double var = 0.0;
  for (double s : qv_samples) {
    const double d = std::exp(-0.5 * s) - mean;
    var += d * d;
  }
  var /= static_cast<double>(qv_samples.size() - 1);
  const double se = std::sqrt(var / static_cast<double>(qv_samples.size()));
  rep.estimate = mean;
  rep.std_error = se;
  const double slack =
      3.0 * se + 0.5 * continuum_rel_err * rep.bound_or_target + 1e-12;
  rep.verdict = (std::abs(mean - rep.bound_or_target) <= slack)
                    ? Verdict::pass
                    : Verdict::fail;
  return rep;
}

}  // namespace gradlat
