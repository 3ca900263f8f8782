#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace gradlat {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  bool converged = true;
};

// Adaptive Gauss(7)/Kronrod(15) integration on a finite interval.
QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              double a, double b,
                              double abs_tol, double rel_tol,
                              int max_depth = 60);

// Fixed-order Gauss-Legendre rule on [a, b]; nodes/weights appended.
void gauss_legendre(int n, double a, double b,
                    std::vector<double>& nodes, std::vector<double>& weights);

// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  bool empty() const { return x_.empty(); }

 private:
  std::size_t interval(double x) const;
  std::vector<double> x_, y_, m_;  // m_: second derivatives at knots
};

}  // namespace gradlat
