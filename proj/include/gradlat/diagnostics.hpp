#pragma once

#include <map>
#include <string>
#include <vector>

#include "gradlat/sampler.hpp"

namespace gradlat {

enum class Verdict { pass, fail, inconclusive };

const char* verdict_name(Verdict v);

struct DiagnosticReport {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double bound_or_target = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::map<std::string, std::string> metadata;

  // CSV row: name,alpha,beta,epsilon,N,estimate,std_error,target,verdict
  // (missing metadata fields emitted empty).
  std::string csv_row() const;
};

std::string report_csv_header();

// Ward identity residuals for one edge, from a fresh chain at the given
// settings. Two candidate forms of the gradient term are reported:
//   R_full = <g(t)> - <e^t (1 + (dphi)^2)> + 1
//   R_half = <g(t)> - <e^t (1 + (dphi)^2 / 2)> + 1
// with g(t) = d/dt ln f_alpha(e^t). Only one of them is the true identity;
// ward_ring_oracle decides which by exact quadrature.
struct WardResult {
  DiagnosticReport full;
  DiagnosticReport half;
  double mean_exp_t = 0.0;
  double mean_exp_t_se = 0.0;
};

WardResult ward_check(const ModelParams& params, std::uint64_t seed,
                      long long n_burn, long long n_keep, int thin,
                      long long edge);

// Exact (quadrature) expectations on the 4-ring (d=1, N=4) at beta = 1:
// tensor-product Gauss-Legendre over the four t variables with the phi
// integral done in closed form through (2D)^{-1}.
struct RingOracle {
  double mean_g = 0.0;
  double mean_exp_t = 0.0;
  double mean_exp_t_dphi_sq = 0.0;  // <e^t (dphi)^2> on one edge
  double phi0_sq = 0.0;
  double grad01_sq = 0.0;  // <(phi_0 - phi_1)^2>
  double r_full = 0.0;
  double r_half = 0.0;
};

RingOracle ward_ring_oracle(double alpha, double eps, int nodes_per_dim = 24,
                            double t_lo = -12.0, double t_hi = 5.0);

// <e^{lambda t}> uniformity across lattice sizes: pass iff every estimate is
// finite and the max/min ratio is < 2; inconclusive when any SE exceeds half
// its estimate.
DiagnosticReport exp_moment_check(
    const std::vector<std::pair<int, ObservableStats>>& per_size,
    double lambda);

// Var(t_e) edge-uniformity: pass iff all positive and max/min < 1.5.
DiagnosticReport t_variance_check(const std::vector<ObservableStats>& per_edge);

// <(phi . v)^{2p}> against [v; G^p v]^p; the report carries the ratio.
DiagnosticReport phi_moment_bound_check(const ModelParams& params,
                                        const ObservableStats& moment_2p,
                                        const TestVector& v, int p);

// Cross-size stability of the moment-bound ratios: max/min < 2.
DiagnosticReport moment_ratio_stability(
    const std::vector<std::pair<int, double>>& ratios_per_size, int p);

// <phi_0^2> over a (N, eps) grid: pass iff increments in 1/eps saturate at
// each N and values stay bounded across N at the smallest eps.
struct TightnessCell {
  int side = 0;
  double eps = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};
DiagnosticReport tightness_proxy(const std::vector<TightnessCell>& grid);

}  // namespace gradlat
