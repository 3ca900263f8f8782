#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <vector>

#include "gradlat/sampler.hpp"
#include "gradlat/stats.hpp"

using namespace gradlat;

namespace {

// Dense 2D matrix for a 4-ring with weights beta e^t and mass eps.
Eigen::Matrix4d dense_2D(const ModelParams& p, const std::vector<double>& t) {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  for (int e = 0; e < 4; ++e) {
    const int j = e, k = (e + 1) % 4;
    const double w = 2.0 * p.beta * std::exp(t[e]);
    A(j, j) += w;
    A(k, k) += w;
    A(j, k) -= w;
    A(k, j) -= w;
  }
  for (int v = 0; v < 4; ++v) A(v, v) += 2.0 * p.epsilon;
  return A;
}

}  // namespace

TEST_CASE("update_phi draws from N(0, (2D)^{-1}) on the 4-ring") {
  ModelParams p{0.3, 1.0, 0.5, TorusLattice(1, 4)};
  GibbsSampler s(p, 314);
  FieldState st = s.state();
  st.t = {0.3, -0.8, 0.1, 1.2};
  s.set_state(st);
  const Eigen::Matrix4d cov = dense_2D(p, st.t).inverse();

  const int n = 100000;
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  RunningStats mean0, kurt_num, kurt_den;
  for (int i = 0; i < n; ++i) {
    s.set_state(st);  // keep t frozen
    s.update_phi();
    const auto& phi = s.state().phi;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) acc(a, b) += phi[a] * phi[b];
    mean0.add(phi[0]);
    const double lin = phi[0] - phi[2];
    kurt_num.add(lin * lin * lin * lin);
    kurt_den.add(lin * lin);
  }
  acc /= n;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      // SE of a Gaussian covariance entry estimate.
      const double se =
          std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / n);
      CHECK(std::abs(acc(a, b) - cov(a, b)) < 3.5 * se);
    }
  CHECK(std::abs(mean0.mean) < 3.5 * mean0.se_iid());
  // Conditional Gaussianity: standardized 4th moment of a linear functional.
  const double kurt = kurt_num.mean / (kurt_den.mean * kurt_den.mean);
  CHECK(kurt == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("update_t conditional law at frozen phi") {
  ModelParams p{0.3, 1.0, 0.5, TorusLattice(1, 4)};
  GibbsSampler s(p, 2718);
  // phi = 0 on all vertices: c = 1 on every edge, t = ln S with S untilted
  // ... tilted by c = 1; E[e^{-e^t}] under e^{-k} f(k)/e^{-1} is
  // E[e^{-2k}]e / 1 = exp(1 - 2^alpha), and E[e^t] = alpha c^{alpha-1}.
  FieldState zero = s.state();
  const int n = 60000;
  RunningStats lap, mean_k;
  for (int i = 0; i < n; ++i) {
    s.set_state(zero);
    s.update_t();
    for (int e = 0; e < 4; ++e) {
      const double k = std::exp(s.state().t[e]);
      lap.add(std::exp(-k));
      mean_k.add(k);
    }
  }
  CHECK(std::abs(lap.mean - std::exp(1.0 - std::pow(2.0, p.alpha))) <
        3.5 * lap.se_iid());
  CHECK(std::abs(mean_k.mean - p.alpha) < 3.5 * mean_k.se_iid());

  // Nonzero gradient: per-edge mean of e^t is alpha c^{alpha-1}.
  FieldState st = zero;
  st.phi = {1.0, 0.0, 0.0, 0.0};
  RunningStats edge0;
  for (int i = 0; i < n; ++i) {
    s.set_state(st);
    s.update_t();
    edge0.add(std::exp(s.state().t[0]));
  }
  const double c = 1.0 + p.beta * 1.0;
  CHECK(std::abs(edge0.mean - p.alpha * std::pow(c, p.alpha - 1.0)) <
        3.5 * edge0.se_iid());
}

TEST_CASE("sweep determinism and checkpoint round trip") {
  ModelParams p{0.4, 1.0, 0.3, TorusLattice(2, 4)};
  GibbsSampler a(p, 99), b(p, 99);
  for (int i = 0; i < 20; ++i) {
    a.sweep();
    b.sweep();
  }
  CHECK(a.state().phi == b.state().phi);
  CHECK(a.state().t == b.state().t);

  const char* path = "test_sampler_checkpoint.bin";
  a.save_checkpoint(path);
  for (int i = 0; i < 10; ++i) a.sweep();
  GibbsSampler c = GibbsSampler::load_checkpoint(path);
  CHECK(c.state().sweep_count == 20);
  for (int i = 0; i < 10; ++i) c.sweep();
  CHECK(a.state().phi == c.state().phi);
  CHECK(a.state().t == c.state().t);
  CHECK(a.rng().state() == c.rng().state());
  std::remove(path);

  // Corrupted header refuses cleanly.
  const char* bad = "test_sampler_bad.bin";
  std::FILE* f = std::fopen(bad, "wb");
  std::fputs("NOTMAGIC and some junk", f);
  std::fclose(f);
  CHECK_THROWS_AS(GibbsSampler::load_checkpoint(bad), std::runtime_error);
  std::remove(bad);
}

TEST_CASE("CG perturbation path matches the Cholesky path in law") {
  // Compare phi0^2 means between the two update mechanisms on the same
  // lattice; exercised by constructing the big-lattice path directly is
  // infeasible here, so validate the perturbation identity on the 4-ring
  // by covariance: run the CG branch via a sampler whose Cholesky limit is
  // bypassed through the public API (identical target law).
  ModelParams p{0.3, 1.0, 0.5, TorusLattice(1, 4)};
  GibbsSampler s(p, 5150);
  FieldState st = s.state();
  st.t = {0.0, 0.5, -0.5, 0.0};
  const Eigen::Matrix4d cov = dense_2D(p, st.t).inverse();
  // The public class picks Cholesky at this size; the perturbation draw is
  // replicated here against solve_green to pin the convention.
  Xoshiro256pp rng(17);
  EdgeWeightedOperator op{p.lattice, {}, 2.0 * p.epsilon};
  op.edge_weights.resize(4);
  for (int e = 0; e < 4; ++e)
    op.edge_weights[e] = 2.0 * p.beta * std::exp(st.t[e]);
  const int n = 60000;
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  for (int i = 0; i < n; ++i) {
    std::vector<double> bvec(4, 0.0);
    for (int e = 0; e < 4; ++e) {
      const double g = std::sqrt(op.edge_weights[e]) * normal(rng);
      bvec[e] += g;
      bvec[(e + 1) % 4] -= g;
    }
    for (int v = 0; v < 4; ++v)
      bvec[v] += std::sqrt(2.0 * p.epsilon) * normal(rng);
    const TestVector x = solve_green(op, TestVector{bvec, false}, 1e-11);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) acc(a, b) += x.values[a] * x.values[b];
  }
  acc /= n;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double se =
          std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / n);
      CHECK(std::abs(acc(a, b) - cov(a, b)) < 3.5 * se);
    }
}

TEST_CASE("run_chain: determinism, ESS, NaN abort") {
  ModelParams p{0.3, 1.0, 0.5, TorusLattice(2, 8)};
  std::vector<Observable> obs{obs_vertex_sq(0), obs_exp_lambda_t(0, 1.0)};
  const ChainStats r1 = run_chain(p, 4242, 200, 1500, 2, obs);
  const ChainStats r2 = run_chain(p, 4242, 200, 1500, 2, obs);
  CHECK(r1.obs.at("phi0_sq").mean == r2.obs.at("phi0_sq").mean);
  CHECK(r1.obs.at("phi0_sq").std_error == r2.obs.at("phi0_sq").std_error);
  CHECK(r1.obs.at("phi0_sq").ess > 100.0);
  CHECK(r1.obs.at("phi0_sq").mean > 0.0);

  std::vector<Observable> bad{
      {"bad", [](const ModelParams&, const FieldState&) {
         return std::numeric_limits<double>::quiet_NaN();
       }}};
  CHECK_THROWS_AS(run_chain(p, 1, 0, 5, 1, bad), std::runtime_error);
}

TEST_CASE("Gibbs phi-marginal agrees with direct Metropolis") {
  ModelParams p{0.3, 1.0, 0.5, TorusLattice(1, 4)};
  std::vector<Observable> obs{obs_vertex_sq(0), obs_edge_gradient_sq(0)};
  const ChainStats gibbs = run_chain(p, 8001, 500, 30000, 1, obs);
  const ChainStats metro = metropolis_phi_chain(p, 8002, 2000, 60000, 2, 1.6, obs);
  for (const char* name : {"phi0_sq", "grad_sq_e0"}) {
    const auto& g = gibbs.obs.at(name);
    const auto& m = metro.obs.at(name);
    const double comb = std::hypot(g.std_error, m.std_error);
    CHECK(std::abs(g.mean - m.mean) < 3.5 * comb);
  }
}
