#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gradlat/lattice.hpp"
#include "gradlat/rng.hpp"
#include "gradlat/stable.hpp"

namespace gradlat {

struct ModelParams {
  double alpha = 0.3;  // in (0, 1/2]
  double beta = 1.0;   // > 0
  double epsilon = 0.5;  // >= 0; > 0 required for phi updates
  TorusLattice lattice{1, 4};

  void validate() const;
};

struct FieldState {
  std::vector<double> phi;  // per vertex
  std::vector<double> t;    // per edge
  long long sweep_count = 0;
};

// Blocked Gibbs sampler for the joint field (phi, t):
//   density ~ exp(-sum_e e^{t_e} (1 + beta (phi_j - phi_k)^2)
//             - eps sum_j phi_j^2) * prod_e f_alpha(e^{t_e}) e^{t_e}.
// phi | t is the centered Gaussian with covariance (2 D)^{-1}, D the
// edge-weighted operator with weights beta e^{t_e} and mass eps; t | phi
// factorizes over edges into tilted stable laws with c = 1 + beta (dphi)^2.
class GibbsSampler {
 public:
  GibbsSampler(ModelParams params, std::uint64_t seed);

  const ModelParams& params() const { return params_; }
  const FieldState& state() const { return state_; }
  // Replaces the field configuration (sizes must match); used for frozen
  // conditional studies and resume paths.
  void set_state(FieldState s);
  const stable::StableDensity& density() const { return *sd_; }
  Xoshiro256pp& rng() { return rng_; }
  const stable::TiltedSampleStats& tilt_stats() const { return tilt_stats_; }

  // Exact Gaussian draw of phi given t: sparse Cholesky for
  // vertex_count <= 4096, CG perturbation sampling above.
  void update_phi();
  // Per-edge independent tilted-stable draws of t given phi.
  void update_t();
  // One systematic-scan sweep: all t, then all phi.
  void sweep();

  void save_checkpoint(const std::string& path) const;
  static GibbsSampler load_checkpoint(const std::string& path);

 private:
  ModelParams params_;
  std::shared_ptr<const stable::StableDensity> sd_;
  FieldState state_;
  Xoshiro256pp rng_;
  stable::TiltedSampleStats tilt_stats_;

  struct CholeskyCache;
  std::shared_ptr<CholeskyCache> chol_;
};

struct Observable {
  std::string name;
  std::function<double(const ModelParams&, const FieldState&)> fn;
};

struct ObservableStats {
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;  // batch means
  double ess = 0.0;
  std::vector<double> trace;  // kept only on request
};

struct ChainStats {
  long long kept = 0;
  std::map<std::string, ObservableStats> obs;
};

// Burn-in, then n_keep thinned sweeps recording the observables. NaN in any
// observable aborts with a state dump in the exception message.
ChainStats run_chain(const ModelParams& params, std::uint64_t seed,
                     long long n_burn, long long n_keep, int thin,
                     const std::vector<Observable>& observables,
                     bool keep_traces = false);

// Ready-made observables.
Observable obs_vertex_sq(long long vertex);
Observable obs_edge_gradient_sq(long long edge);
Observable obs_exp_lambda_t(long long edge, double lambda);
Observable obs_t_value(long long edge);
Observable obs_linear_power(const TestVector& v, int power);

// Random-walk Metropolis on phi alone, targeting
//   exp(-sum_e (1 + beta (dphi)^2)^alpha - eps sum phi^2)
// directly; independent oracle for the Gibbs chain's phi-marginal.
ChainStats metropolis_phi_chain(const ModelParams& params, std::uint64_t seed,
                                long long n_burn, long long n_keep, int thin,
                                double step,
                                const std::vector<Observable>& observables);

}  // namespace gradlat
