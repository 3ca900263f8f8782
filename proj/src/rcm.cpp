#include "gradlat/rcm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gradlat {

Environment make_environment(const TorusLattice& lat,
                             std::vector<double> omega) {
  if (static_cast<long long>(omega.size()) != lat.edge_count())
    throw std::domain_error("make_environment: edge weight count mismatch");
  for (double w : omega)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::domain_error(
          "make_environment: conductances must be positive and finite");
  Environment env{lat, std::move(omega), {}, {}};
  env.u_measure.assign(lat.vertex_count(), 0.0);
  env.v_measure.assign(lat.vertex_count(), 0.0);
  for (long long e = 0; e < lat.edge_count(); ++e) {
    long long a, b;
    lat.edge_endpoints(e, a, b);
    env.u_measure[a] += env.omega[e];
    env.u_measure[b] += env.omega[e];
    env.v_measure[a] += 1.0 / env.omega[e];
    env.v_measure[b] += 1.0 / env.omega[e];
  }
  return env;
}

WalkPath simulate_vsrw(const Environment& env, long long x0, double T,
                       Xoshiro256pp& rng) {
  if (!(T > 0.0)) throw std::domain_error("simulate_vsrw: T must be > 0");
  const TorusLattice& lat = env.lattice;
  const int d = lat.dim();
  const int N = lat.side();

  WalkPath path;
  path.start = x0;
  path.horizon = T;
  std::vector<int> pos = lat.coords(x0);
  path.cover_positions.insert(path.cover_positions.end(), pos.begin(),
                              pos.end());
  const std::vector<int> origin = pos;

  long long x = x0;
  double time = 0.0;
  std::vector<double> rates(2 * d);
  while (true) {
    const double rate = env.u_measure[x];
    time += exponential(rng) / rate;
    if (time > T) break;
    // Edge rates: slot 2a is +axis (edge at x), slot 2a+1 is -axis (edge at
    // the negative neighbor).
    double total = 0.0;
    for (int a = 0; a < d; ++a) {
      rates[2 * a] = env.omega[lat.edge_index(x, a)];
      rates[2 * a + 1] = env.omega[lat.edge_index(lat.neighbor(x, a, -1), a)];
      total += rates[2 * a] + rates[2 * a + 1];
    }
    double pick = uniform01(rng) * total;
    int slot = 0;
    while (slot + 1 < 2 * d && pick > rates[slot]) {
      pick -= rates[slot];
      ++slot;
    }
    const int axis = slot / 2;
    const int dir = (slot % 2 == 0) ? +1 : -1;
    x = lat.neighbor(x, axis, dir);
    pos[axis] += dir;
    if (std::abs(pos[axis] - origin[axis]) > N) path.wrapped = true;
    path.jump_times.push_back(time);
    path.torus_vertices.push_back(x);
    path.cover_positions.insert(path.cover_positions.end(), pos.begin(),
                                pos.end());
  }
  return path;
}

long long encode_displacement(const int* d, int dim) {
  long long key = 0;
  for (int a = 0; a < dim; ++a) {
    const long long shifted = d[a] + 2048;
    key |= shifted << (12 * a);
  }
  return key;
}

HeatKernelEstimate heat_kernel(const Environment& env, long long x,
                               const std::vector<double>& t_grid,
                               long long walkers, Xoshiro256pp& rng) {
  if (t_grid.empty()) throw std::domain_error("heat_kernel: empty t grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::domain_error("heat_kernel: t grid must be increasing");
  const int d = env.lattice.dim();
  const double T = t_grid.back();
  const std::vector<int> origin = env.lattice.coords(x);

  HeatKernelEstimate out;
  out.t_grid = t_grid;
  out.prob.resize(t_grid.size());
  out.walkers = walkers;
  std::vector<int> disp(d);
  for (long long w = 0; w < walkers; ++w) {
    Xoshiro256pp wrng = rng.split(static_cast<std::uint64_t>(w));
    const WalkPath path = simulate_vsrw(env, x, T * (1.0 + 1e-12), wrng);
    if (path.wrapped) ++out.wrap_events;
    std::size_t jump = 0;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
      while (jump < path.jump_times.size() && path.jump_times[jump] <= t_grid[g])
        ++jump;
      // Position after `jump` jumps is row `jump` of cover_positions.
      for (int a = 0; a < d; ++a)
        disp[a] = path.cover_positions[jump * d + a] - origin[a];
      out.prob[g][encode_displacement(disp.data(), d)] += 1.0;
    }
  }
  out.sup_p.resize(t_grid.size());
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    double sup = 0.0;
    for (auto& [key, count] : out.prob[g]) {
      count /= static_cast<double>(walkers);
      sup = std::max(sup, count);
    }
    out.sup_p[g] = sup;
  }
  return out;
}

std::vector<double> fold_to_torus(
    const TorusLattice& lat, long long x,
    const std::unordered_map<long long, double>& p) {
  const int d = lat.dim();
  const std::vector<int> origin = lat.coords(x);
  std::vector<double> out(lat.vertex_count(), 0.0);
  std::vector<int> c(d);
  for (const auto& [key, mass] : p) {
    for (int a = 0; a < d; ++a)
      c[a] = origin[a] + static_cast<int>(((key >> (12 * a)) & 0xfff) - 2048);
    out[lat.vertex(c)] += mass;
  }
  return out;
}

std::vector<std::vector<double>> heat_kernel_exact(
    const Environment& env, long long x, const std::vector<double>& t_grid) {
  const long long nv = env.lattice.vertex_count();
  if (nv > 512)
    throw std::domain_error("heat_kernel_exact: lattice too large (> 512)");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nv, nv);
  for (long long e = 0; e < env.lattice.edge_count(); ++e) {
    long long a, b;
    env.lattice.edge_endpoints(e, a, b);
    L(a, b) += env.omega[e];
    L(b, a) += env.omega[e];
  }
  for (long long v = 0; v < nv; ++v) L(v, v) = -env.u_measure[v];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd& V = es.eigenvectors();

  std::vector<std::vector<double>> out(t_grid.size(),
                                       std::vector<double>(nv, 0.0));
  for (std::size_t g = 0; g < t_grid.size(); ++g)
    for (long long y = 0; y < nv; ++y) {
      double p = 0.0;
      for (long long k = 0; k < nv; ++k)
        p += std::exp(t_grid[g] * lam[k]) * V(x, k) * V(y, k);
      out[g][y] = p;
    }
  return out;
}

DiagnosticReport heat_kernel_decay_check(const std::vector<double>& t_grid,
                                         const std::vector<double>& sup_p,
                                         const std::vector<double>& se,
                                         int dim) {
  const std::size_t n = t_grid.size();
  if (n < 3 || sup_p.size() != n || se.size() != n)
    throw std::domain_error("heat_kernel_decay_check: need >= 3 points");
  // WLS fit of y = a + b t with y = t^{d/2} sup_p, weights 1/Var(y).
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::pow(t_grid[i], 0.5 * dim);
    const double y = sup_p[i] * scale;
    const double sy = std::max(se[i] * scale, 1e-300);
    const double w = 1.0 / (sy * sy);
    sw += w;
    swx += w * t_grid[i];
    swy += w * y;
    swxx += w * t_grid[i] * t_grid[i];
    swxy += w * t_grid[i] * y;
  }
  const double det = sw * swxx - swx * swx;
  const double slope = (sw * swxy - swx * swy) / det;
  const double slope_se = std::sqrt(sw / det);

  DiagnosticReport rep;
  rep.name = "heat_kernel_envelope_slope";
  rep.estimate = slope;
  rep.std_error = slope_se;
  rep.bound_or_target = 0.0;
  rep.metadata["dim"] = std::to_string(dim);
  // One-sided 95%: fail only if the slope is significantly positive.
  rep.verdict =
      slope <= 1.645 * slope_se ? Verdict::pass : Verdict::fail;
  return rep;
}

QfcltResult qfclt_check(const std::vector<Environment>& envs,
                        const std::vector<double>& T_grid,
                        long long walkers_per_env, std::uint64_t seed) {
  if (envs.empty() || T_grid.size() < 2)
    throw std::domain_error("qfclt_check: need environments and >= 2 horizons");
  const int d = envs.front().lattice.dim();
  const double Tmax = T_grid.back();

  QfcltResult out;
  const std::size_t ng = T_grid.size();
  // Accumulate per grid time: sums of displacement products over walkers.
  std::vector<std::vector<double>> sum1(ng, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> sum2(ng, std::vector<double>(d * d, 0.0));
  std::vector<std::vector<double>> sum4(ng, std::vector<double>(d * d, 0.0));
  long long total_walkers = 0;

  Xoshiro256pp master(seed);
  std::vector<int> disp(d);
  for (std::size_t ei = 0; ei < envs.size(); ++ei) {
    const Environment& env = envs[ei];
    const std::vector<int> origin = env.lattice.coords(0);
    Xoshiro256pp env_rng = master.split(ei);
    for (long long w = 0; w < walkers_per_env; ++w) {
      Xoshiro256pp wrng = env_rng.split(static_cast<std::uint64_t>(w));
      const WalkPath path = simulate_vsrw(env, 0, Tmax * (1.0 + 1e-12), wrng);
      if (path.wrapped) ++out.wrap_events;
      ++total_walkers;
      std::size_t jump = 0;
      for (std::size_t g = 0; g < ng; ++g) {
        while (jump < path.jump_times.size() &&
               path.jump_times[jump] <= T_grid[g])
          ++jump;
        for (int a = 0; a < d; ++a)
          disp[a] = path.cover_positions[jump * d + a] - origin[a];
        for (int a = 0; a < d; ++a) {
          sum1[g][a] += disp[a];
          for (int b = 0; b < d; ++b) {
            const double prod = static_cast<double>(disp[a]) * disp[b];
            sum2[g][a * d + b] += prod;
            sum4[g][a * d + b] += prod * prod;
          }
        }
      }
    }
  }

  const double n = static_cast<double>(total_walkers);
  auto sigma_at = [&](std::size_t g, std::vector<double>& sig,
                      std::vector<double>& sig_se) {
    sig.resize(d * d);
    sig_se.resize(d * d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const int i = a * d + b;
        const double m2 = sum2[g][i] / n;
        const double cov = m2 - (sum1[g][a] / n) * (sum1[g][b] / n);
        sig[i] = cov / T_grid[g];
        const double var_m2 = (sum4[g][i] / n - m2 * m2) / n;
        sig_se[i] = std::sqrt(std::max(var_m2, 0.0)) / T_grid[g];
      }
  };
  sigma_at(ng - 1, out.sigma, out.sigma_se);

  // Stabilization: compare against the closest grid point to Tmax / 2.
  std::size_t half = 0;
  double best = 1e300;
  for (std::size_t g = 0; g + 1 < ng; ++g) {
    const double gap = std::abs(T_grid[g] - 0.5 * Tmax);
    if (gap < best) {
      best = gap;
      half = g;
    }
  }
  std::vector<double> sig_half, se_half;
  sigma_at(half, sig_half, se_half);
  double worst = 0.0;
  for (int a = 0; a < d; ++a) {
    const double rel = std::abs(out.sigma[a * d + a] - sig_half[a * d + a]) /
                       std::abs(out.sigma[a * d + a]);
    worst = std::max(worst, rel);
  }

  out.report.name = "qfclt_stabilization";
  out.report.estimate = worst;
  out.report.bound_or_target = 0.10;
  out.report.metadata["wrap_events"] = std::to_string(out.wrap_events);
  out.report.metadata["walkers"] = std::to_string(total_walkers);
  if (out.wrap_events > 0) {
    out.report.verdict = Verdict::fail;
    out.report.metadata["reason"] = "walkers wrapped the torus";
  } else {
    out.report.verdict =
        worst < 0.10 ? Verdict::pass : Verdict::inconclusive;
  }
  return out;
}

}  // namespace gradlat
