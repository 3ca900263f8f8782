#pragma once

#include <cstdint>
#include <vector>

namespace gradlat {

// Periodic hypercubic lattice (torus) with uniform side N per axis.
// Vertices are indexed lexicographically; edge a*vertex_count() + v is the
// bond from v to its neighbor in the positive direction of axis a, which
// makes edges a bijection with (vertex, positive axis direction).
class TorusLattice {
 public:
  TorusLattice(int dim, int side);

  int dim() const { return dim_; }
  int side() const { return side_; }
  long long vertex_count() const { return nv_; }
  long long edge_count() const { return static_cast<long long>(dim_) * nv_; }

  std::vector<int> coords(long long v) const;
  long long vertex(const std::vector<int>& c) const;

  // Neighbor of v along axis, dir = +1 or -1, with wraparound.
  long long neighbor(long long v, int axis, int dir) const;

  long long edge_index(long long v, int axis) const {
    return static_cast<long long>(axis) * nv_ + v;
  }
  // Endpoints (v, neighbor(v, axis, +1)) of edge e.
  void edge_endpoints(long long e, long long& a, long long& b) const;

 private:
  int dim_;
  int side_;
  long long nv_;
  std::vector<long long> stride_;
};

struct TestVector {
  std::vector<double> values;
  bool zero_sum_flag = false;
};

// Subtracts the mean and sets the flag.
TestVector make_zero_sum(std::vector<double> values);
double vector_sum(const TestVector& v);

// The operator D defined through its quadratic form
//   [f; Df] = sum_{e=(j,k)} w_e (f_j - f_k)^2 + mass * sum_j f_j^2.
// Polarization convention: (Df)_j = sum_{k~j} w_{jk}(f_j - f_k) + mass f_j,
// which makes [f; Df] with the plain dot product reproduce the form above
// (each edge contributes w_e(f_j - f_k)^2 once).
struct EdgeWeightedOperator {
  TorusLattice lattice;
  std::vector<double> edge_weights;  // > 0, indexed as lattice edges
  double mass = 0.0;                 // >= 0

  void validate() const;
};

std::vector<double> apply_D(const EdgeWeightedOperator& op,
                            const std::vector<double>& f);
double quadratic_form(const EdgeWeightedOperator& op,
                      const std::vector<double>& f);
double dot(const std::vector<double>& a, const std::vector<double>& b);

// Solves D u = v by Jacobi-preconditioned conjugate gradient, matrix-free.
// For mass = 0 both v and the solution live on the mean-zero subspace
// (v must be zero-sum; the returned u is the zero-mean representative).
TestVector solve_green(const EdgeWeightedOperator& op, const TestVector& v,
                       double tol);

// Green function of the periodic lattice Laplacian (unit weights, mass 0)
// applied to a zero-sum v; CG path.
TestVector laplacian_green_p(const TorusLattice& lat, const TestVector& v,
                             double tol);
// Same operator inverted in the discrete Fourier basis (axis-wise DFT);
// independent of the CG path, used as its oracle and as the fast path.
TestVector laplacian_green_p_spectral(const TorusLattice& lat,
                                      const TestVector& v);

struct GreenBoundReport {
  double lhs = 0.0;  // [v; G_{eps}(t) v]
  double rhs = 0.0;  // sum_e ((G^p v)_j - (G^p v)_k)^2 e^{-t_e} / beta
  bool pass = false;
};

// Checks [v; G_{eps}(t) v] <= sum_e (grad G^p v)_e^2 e^{-t_e} / beta, the
// quadratic-form bound on the Green function of D with weights beta e^{t_e}.
GreenBoundReport green_form_bound_check(const TorusLattice& lat,
                                        const std::vector<double>& t_edges,
                                        double beta, double eps,
                                        const TestVector& v,
                                        double tol = 1e-8);

// Shortest-path distance with edge length 1 ^ w_e^{-1/2} (Dijkstra).
double chemical_distance(const TorusLattice& lat,
                         const std::vector<double>& weights,
                         long long x, long long y);

}  // namespace gradlat
