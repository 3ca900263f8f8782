#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradlat/rcm.hpp"
#include "gradlat/stats.hpp"

using namespace gradlat;

TEST_CASE("environment measures") {
  TorusLattice lat(2, 4);
  std::vector<double> omega(lat.edge_count(), 2.0);
  const Environment env = make_environment(lat, omega);
  for (long long v = 0; v < lat.vertex_count(); ++v) {
    CHECK(env.u_measure[v] == doctest::Approx(8.0));
    CHECK(env.v_measure[v] == doctest::Approx(2.0));
  }
  omega[3] = -1.0;
  CHECK_THROWS_AS(make_environment(lat, omega), std::domain_error);
}

TEST_CASE("constant-rate walk: Poisson jump counts and holding times") {
  TorusLattice lat(1, 32);
  const Environment env =
      make_environment(lat, std::vector<double>(lat.edge_count(), 1.0));
  Xoshiro256pp rng(31);
  const double T = 10.0;
  RunningStats jumps, sq, hold;
  for (int i = 0; i < 20000; ++i) {
    const WalkPath p = simulate_vsrw(env, 0, T, rng);
    const double n = static_cast<double>(p.jump_times.size());
    jumps.add(n);
    sq.add(n * n);
    if (!p.jump_times.empty()) hold.add(p.jump_times.front());
    // Structural invariants.
    for (std::size_t j = 1; j < p.jump_times.size(); ++j)
      CHECK(p.jump_times[j] > p.jump_times[j - 1]);
    CHECK_FALSE(p.wrapped);
  }
  // Total rate u = 2: N(T) ~ Poisson(2T).
  CHECK(std::abs(jumps.mean - 2.0 * T) < 3.5 * jumps.se_iid());
  const double var = sq.mean - jumps.mean * jumps.mean;
  CHECK(var == doctest::Approx(2.0 * T).epsilon(0.05));
  // First holding time ~ Exp(2).
  CHECK(std::abs(hold.mean - 0.5) < 3.5 * hold.se_iid());
}

TEST_CASE("heat kernel MC matches the spectral oracle") {
  TorusLattice lat(1, 8);
  Xoshiro256pp wrng(12);
  std::vector<double> omega(lat.edge_count());
  for (auto& w : omega) w = std::exp(0.7 * normal(wrng));
  const Environment env = make_environment(lat, omega);

  const std::vector<double> t_grid{0.5, 1.0, 2.0};
  const long long walkers = 200000;
  Xoshiro256pp rng(77);
  const HeatKernelEstimate mc = heat_kernel(env, 3, t_grid, walkers, rng);
  const auto exact = heat_kernel_exact(env, 3, t_grid);

  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    // Conservation of the empirical measure.
    double total = 0.0;
    for (const auto& [k, p] : mc.prob[g]) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> folded = fold_to_torus(lat, 3, mc.prob[g]);
    double exact_total = 0.0;
    for (long long y = 0; y < lat.vertex_count(); ++y) {
      exact_total += exact[g][y];
      const double se =
          std::sqrt(exact[g][y] * (1.0 - exact[g][y]) / walkers) + 1e-12;
      CHECK(std::abs(folded[y] - exact[g][y]) < 4.0 * se);
    }
    CHECK(exact_total == doctest::Approx(1.0).epsilon(1e-10));
  }
  // N = 8 is deliberately small to exercise folding; a handful of walkers
  // exceeding one full period is expected and handled by the fold.
  CHECK(mc.wrap_events < walkers / 1000);
}

TEST_CASE("spectral kernel: symmetry and monotone on-diagonal decay") {
  TorusLattice lat(2, 4);
  Xoshiro256pp rng(9);
  std::vector<double> omega(lat.edge_count());
  for (auto& w : omega) w = std::exp(0.5 * normal(rng));
  const Environment env = make_environment(lat, omega);
  std::vector<double> ts{0.2, 0.5, 1.0, 2.0, 4.0};
  const auto from0 = heat_kernel_exact(env, 0, ts);
  const auto from5 = heat_kernel_exact(env, 5, ts);
  for (std::size_t g = 0; g < ts.size(); ++g)
    CHECK(from0[g][5] == doctest::Approx(from5[g][0]).epsilon(1e-9));
  for (std::size_t g = 1; g < ts.size(); ++g)
    CHECK(from0[g][0] < from0[g - 1][0]);
}

TEST_CASE("constant environment on-diagonal local CLT plateau") {
  // Rate-1 edges in d=1: p(t,0,0) -> (4 pi t)^{-1/2} for 1 << t << N^2.
  TorusLattice lat(1, 64);
  const Environment env =
      make_environment(lat, std::vector<double>(lat.edge_count(), 1.0));
  const std::vector<double> ts{10.0, 20.0};
  const auto p = heat_kernel_exact(env, 0, ts);
  for (std::size_t g = 0; g < ts.size(); ++g) {
    const double clt = 1.0 / std::sqrt(4.0 * 3.14159265358979323846 * ts[g]);
    CHECK(p[g][0] == doctest::Approx(clt).epsilon(0.02));
  }
}

TEST_CASE("heat_kernel_decay_check trend verdicts") {
  std::vector<double> t{5, 10, 15, 20, 30, 40, 50};
  std::vector<double> flat, rising, se;
  for (double x : t) {
    flat.push_back(0.06 * std::pow(x, -1.5));
    rising.push_back(0.06 * std::pow(x, -1.5) * (1.0 + 0.05 * x));
    se.push_back(0.001 * std::pow(x, -1.5));
  }
  CHECK(heat_kernel_decay_check(t, flat, se, 3).verdict == Verdict::pass);
  CHECK(heat_kernel_decay_check(t, rising, se, 3).verdict == Verdict::fail);
}

TEST_CASE("qfclt on constant environments: Cov(X_T)/T = 2wI") {
  const double w = 1.5;
  TorusLattice lat(2, 32);
  std::vector<Environment> envs{
      make_environment(lat, std::vector<double>(lat.edge_count(), w))};
  const std::vector<double> T_grid{2.0, 4.0, 8.0};
  const QfcltResult res = qfclt_check(envs, T_grid, 30000, 1001);
  CHECK(res.wrap_events == 0);
  CHECK(res.report.verdict == Verdict::pass);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double target = (a == b) ? 2.0 * w : 0.0;
      CHECK(std::abs(res.sigma[a * 2 + b] - target) <
            3.5 * res.sigma_se[a * 2 + b] + 1e-9);
    }
}
