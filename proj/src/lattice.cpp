#include "gradlat/lattice.hpp"

#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>
#include <string>

namespace gradlat {

TorusLattice::TorusLattice(int dim, int side) : dim_(dim), side_(side) {
  if (dim < 1) throw std::domain_error("TorusLattice: dim must be >= 1");
  if (side < 3) throw std::domain_error("TorusLattice: side must be >= 3");
  nv_ = 1;
  stride_.resize(dim);
  for (int a = 0; a < dim; ++a) {
    stride_[a] = nv_;
    nv_ *= side;
  }
}

std::vector<int> TorusLattice::coords(long long v) const {
  std::vector<int> c(dim_);
  for (int a = 0; a < dim_; ++a) {
    c[a] = static_cast<int>(v % side_);
    v /= side_;
  }
  return c;
}

long long TorusLattice::vertex(const std::vector<int>& c) const {
  if (static_cast<int>(c.size()) != dim_)
    throw std::domain_error("TorusLattice::vertex: coordinate count mismatch");
  long long v = 0;
  for (int a = 0; a < dim_; ++a) {
    int x = c[a] % side_;
    if (x < 0) x += side_;
    v += stride_[a] * x;
  }
  return v;
}

long long TorusLattice::neighbor(long long v, int axis, int dir) const {
  const long long s = stride_[axis];
  const int x = static_cast<int>((v / s) % side_);
  int xn = x + dir;
  if (xn >= side_) xn -= side_;
  if (xn < 0) xn += side_;
  return v + static_cast<long long>(xn - x) * s;
}

void TorusLattice::edge_endpoints(long long e, long long& a,
                                  long long& b) const {
  const int axis = static_cast<int>(e / nv_);
  a = e % nv_;
  b = neighbor(a, axis, +1);
}

TestVector make_zero_sum(std::vector<double> values) {
  double s = 0.0;
  for (double x : values) s += x;
  const double mean = s / static_cast<double>(values.size());
  for (double& x : values) x -= mean;
  return TestVector{std::move(values), true};
}

double vector_sum(const TestVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x;
  return s;
}

void EdgeWeightedOperator::validate() const {
  if (static_cast<long long>(edge_weights.size()) != lattice.edge_count())
    throw std::domain_error("EdgeWeightedOperator: edge weight count mismatch");
  for (double w : edge_weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::domain_error(
          "EdgeWeightedOperator: weights must be positive and finite");
  if (!(mass >= 0.0))
    throw std::domain_error("EdgeWeightedOperator: mass must be >= 0");
}

std::vector<double> apply_D(const EdgeWeightedOperator& op,
                            const std::vector<double>& f) {
  const TorusLattice& lat = op.lattice;
  const long long nv = lat.vertex_count();
  if (static_cast<long long>(f.size()) != nv)
    throw std::domain_error("apply_D: dimension mismatch");
  std::vector<double> out(nv, 0.0);
  for (long long v = 0; v < nv; ++v) out[v] = op.mass * f[v];
  for (int a = 0; a < lat.dim(); ++a) {
    for (long long v = 0; v < nv; ++v) {
      const long long u = lat.neighbor(v, a, +1);
      const double w = op.edge_weights[lat.edge_index(v, a)];
      const double d = w * (f[v] - f[u]);
      out[v] += d;
      out[u] -= d;
    }
  }
  return out;
}

double quadratic_form(const EdgeWeightedOperator& op,
                      const std::vector<double>& f) {
  const TorusLattice& lat = op.lattice;
  double q = 0.0;
  for (int a = 0; a < lat.dim(); ++a) {
    for (long long v = 0; v < lat.vertex_count(); ++v) {
      const double d = f[v] - f[lat.neighbor(v, a, +1)];
      q += op.edge_weights[lat.edge_index(v, a)] * d * d;
    }
  }
  for (double x : f) q += op.mass * x * x;
  return q;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {
void project_mean_zero(std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  const double mean = s / static_cast<double>(x.size());
  for (double& v : x) v -= mean;
}
}  // namespace

TestVector solve_green(const EdgeWeightedOperator& op, const TestVector& v,
                       double tol) {
  op.validate();
  if (!(tol > 0.0)) throw std::domain_error("solve_green: tol must be > 0");
  const long long nv = op.lattice.vertex_count();
  if (static_cast<long long>(v.values.size()) != nv)
    throw std::domain_error("solve_green: dimension mismatch");
  const bool singular = (op.mass == 0.0);
  if (singular && !v.zero_sum_flag)
    throw std::domain_error("solve_green: mass = 0 requires zero-sum v");

  // Jacobi preconditioner: diagonal of D.
  std::vector<double> diag(nv, op.mass);
  for (int a = 0; a < op.lattice.dim(); ++a) {
    for (long long w = 0; w < nv; ++w) {
      const double we = op.edge_weights[op.lattice.edge_index(w, a)];
      diag[w] += we;
      diag[op.lattice.neighbor(w, a, +1)] += we;
    }
  }

  std::vector<double> x(nv, 0.0);
  std::vector<double> r = v.values;
  if (singular) project_mean_zero(r);
  const double vnorm = std::sqrt(dot(r, r));
  if (vnorm == 0.0) return TestVector{std::move(x), true};

  std::vector<double> z(nv), p(nv);
  for (long long i = 0; i < nv; ++i) z[i] = r[i] / diag[i];
  if (singular) project_mean_zero(z);
  p = z;
  double rz = dot(r, z);
  const long long max_iter = 20 * nv + 200;
  for (long long it = 0; it < max_iter; ++it) {
    std::vector<double> Ap = apply_D(op, p);
    const double alpha = rz / dot(p, Ap);
    for (long long i = 0; i < nv; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    if (std::sqrt(dot(r, r)) <= tol * vnorm) {
      if (singular) project_mean_zero(x);
      return TestVector{std::move(x), singular};
    }
    for (long long i = 0; i < nv; ++i) z[i] = r[i] / diag[i];
    if (singular) project_mean_zero(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (long long i = 0; i < nv; ++i) p[i] = z[i] + beta * p[i];
  }
  throw std::runtime_error("solve_green: CG did not converge, residual " +
                           std::to_string(std::sqrt(dot(r, r)) / vnorm));
}

TestVector laplacian_green_p(const TorusLattice& lat, const TestVector& v,
                             double tol) {
  if (!v.zero_sum_flag)
    throw std::domain_error("laplacian_green_p: v must be zero-sum");
  EdgeWeightedOperator op{lat, std::vector<double>(lat.edge_count(), 1.0), 0.0};
  return solve_green(op, v, tol);
}

TestVector laplacian_green_p_spectral(const TorusLattice& lat,
                                      const TestVector& v) {
  if (!v.zero_sum_flag)
    throw std::domain_error("laplacian_green_p_spectral: v must be zero-sum");
  const long long nv = lat.vertex_count();
  const int N = lat.side();
  const double two_pi = 2.0 * 3.14159265358979323846;

  std::vector<std::complex<double>> work(v.values.begin(), v.values.end());
  std::vector<std::complex<double>> tmp(nv);
  // Precomputed N x N DFT twiddle table.
  std::vector<std::complex<double>> w_fwd(N * N), w_inv(N * N);
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j) {
      const double ph = two_pi * k * j / N;
      w_fwd[k * N + j] = {std::cos(ph), -std::sin(ph)};
      w_inv[k * N + j] = {std::cos(ph), std::sin(ph)};
    }
  auto dft_axis = [&](int axis, const std::vector<std::complex<double>>& tw) {
    long long stride = 1;
    for (int a = 0; a < axis; ++a) stride *= N;
    for (long long base = 0; base < nv; ++base) {
      if ((base / stride) % N != 0) continue;
      for (int k = 0; k < N; ++k) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < N; ++j) acc += tw[k * N + j] * work[base + j * stride];
        tmp[base + k * stride] = acc;
      }
    }
    work.swap(tmp);
  };

  for (int a = 0; a < lat.dim(); ++a) dft_axis(a, w_fwd);
  // Divide by the Laplacian symbol; drop the zero mode (mean-zero inverse).
  for (long long idx = 0; idx < nv; ++idx) {
    double sym = 0.0;
    long long rem = idx;
    for (int a = 0; a < lat.dim(); ++a) {
      const int k = static_cast<int>(rem % N);
      rem /= N;
      sym += 2.0 * (1.0 - std::cos(two_pi * k / N));
    }
    work[idx] = (sym == 0.0) ? 0.0 : work[idx] / sym;
  }
  for (int a = 0; a < lat.dim(); ++a) dft_axis(a, w_inv);

  std::vector<double> out(nv);
  for (long long i = 0; i < nv; ++i) out[i] = work[i].real() / nv;
  project_mean_zero(out);
  return TestVector{std::move(out), true};
}

GreenBoundReport green_form_bound_check(const TorusLattice& lat,
                                        const std::vector<double>& t_edges,
                                        double beta, double eps,
                                        const TestVector& v, double tol) {
  if (!(beta > 0.0))
    throw std::domain_error("green_form_bound_check: beta must be > 0");
  EdgeWeightedOperator op{lat, {}, eps};
  op.edge_weights.resize(t_edges.size());
  for (std::size_t e = 0; e < t_edges.size(); ++e)
    op.edge_weights[e] = beta * std::exp(t_edges[e]);
  const TestVector u = solve_green(op, v, 1e-12);
  const TestVector gp = laplacian_green_p_spectral(lat, v);

  GreenBoundReport rep;
  rep.lhs = dot(v.values, u.values);
  for (int a = 0; a < lat.dim(); ++a) {
    for (long long w = 0; w < lat.vertex_count(); ++w) {
      const double d = gp.values[w] - gp.values[lat.neighbor(w, a, +1)];
      rep.rhs += d * d * std::exp(-t_edges[lat.edge_index(w, a)]) / beta;
    }
  }
  rep.pass = rep.lhs >= -tol && rep.lhs <= rep.rhs * (1.0 + tol) + tol;
  return rep;
}

double chemical_distance(const TorusLattice& lat,
                         const std::vector<double>& weights,
                         long long x, long long y) {
  const long long nv = lat.vertex_count();
  std::vector<double> dist(nv, 1e300);
  using Item = std::pair<double, long long>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[x] = 0.0;
  pq.emplace(0.0, x);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == y) return d;
    for (int a = 0; a < lat.dim(); ++a) {
      for (int dir : {+1, -1}) {
        const long long n = lat.neighbor(u, a, dir);
        const long long e =
            dir > 0 ? lat.edge_index(u, a) : lat.edge_index(n, a);
        const double len = std::min(1.0, 1.0 / std::sqrt(weights[e]));
        if (dist[u] + len < dist[n]) {
          dist[n] = dist[u] + len;
          pq.emplace(dist[n], n);
        }
      }
    }
  }
  return dist[y];
}

}  // namespace gradlat
