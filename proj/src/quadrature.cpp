#include "gradlat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gradlat {

namespace {

// Kronrod-15 nodes on [-1,1] (positive half) and weights; Gauss-7 embedded.
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct PanelEstimate {
  double kronrod;
  double err;
};

PanelEstimate gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kXgk[i]);
    fv[14 - i] = f(c + h * kXgk[i]);
  }
  fv[7] = f(c);
  double rk = 0.0, rg = 0.0;
  for (int i = 0; i < 7; ++i) rk += kWgk[i] * (fv[i] + fv[14 - i]);
  rk += kWgk[7] * fv[7];
  // Gauss-7 uses the odd Kronrod nodes (indices 1,3,5,7 of the half-rule).
  for (int i = 0; i < 3; ++i) rg += kWg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  rg += kWg[3] * fv[7];
  rk *= h;
  rg *= h;
  return {rk, std::abs(rk - rg)};
}

void integrate_recursive(const std::function<double(double)>& f,
                         double a, double b, double tol, int depth,
                         int max_depth, QuadResult& out) {
  PanelEstimate e = gk15(f, a, b);
  if (e.err <= tol || depth >= max_depth) {
    out.value += e.kronrod;
    out.abs_error += e.err;
    if (depth >= max_depth && e.err > tol) out.converged = false;
    return;
  }
  const double c = 0.5 * (a + b);
  integrate_recursive(f, a, c, 0.5 * tol, depth + 1, max_depth, out);
  integrate_recursive(f, c, b, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              double a, double b,
                              double abs_tol, double rel_tol,
                              int max_depth) {
  PanelEstimate first = gk15(f, a, b);
  double tol = std::max(abs_tol, rel_tol * std::abs(first.kronrod));
  QuadResult out;
  integrate_recursive(f, a, b, tol, 0, max_depth, out);
  // One refinement pass of the tolerance if the first estimate was poor.
  if (std::abs(out.value) > 0 &&
      tol > rel_tol * std::abs(out.value) && abs_tol < tol) {
    QuadResult out2;
    out2.converged = true;
    integrate_recursive(f, a, b,
                        std::max(abs_tol, rel_tol * std::abs(out.value)),
                        0, max_depth, out2);
    return out2;
  }
  return out;
}

void gauss_legendre(int n, double a, double b,
                    std::vector<double>& nodes, std::vector<double>& weights) {
  // Newton iteration on Legendre polynomials.
  const double pi = 3.14159265358979323846;
  nodes.reserve(nodes.size() + n);
  weights.reserve(weights.size() + n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double xm = 0.5 * (b + a);
    const double xl = 0.5 * (b - a);
    const double w = 2.0 * xl / ((1.0 - x * x) * pp * pp);
    nodes.push_back(xm - xl * x);
    weights.push_back(w);
    const bool center_node = (n % 2 == 1) && (i == m - 1);
    if (!center_node) {
      nodes.push_back(xm + xl * x);
      weights.push_back(w);
    }
  }
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 3 || y_.size() != n) throw std::invalid_argument("CubicSpline: need >= 3 points");
  m_.assign(n, 0.0);
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double sig = (x_[i] - x_[i - 1]) / (x_[i + 1] - x_[i - 1]);
    const double p = sig * m_[i - 1] + 2.0;
    m_[i] = (sig - 1.0) / p;
    u[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]) -
           (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
    u[i] = (6.0 * u[i] / (x_[i + 1] - x_[i - 1]) - sig * u[i - 1]) / p;
  }
  for (std::size_t k = n - 1; k-- > 0;) m_[k] = m_[k] * m_[k + 1] + u[k];
}

std::size_t CubicSpline::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  if (i == 0) return 0;
  if (i >= x_.size()) return x_.size() - 2;
  return i - 1;
}

double CubicSpline::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h +
         ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]) * h / 6.0;
}

}  // namespace gradlat
