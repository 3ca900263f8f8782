#include "gradlat/sampler.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gradlat/stats.hpp"

namespace gradlat {

namespace {
constexpr char kMagic[8] = {'G', 'R', 'A', 'D', 'L', 'A', 'T', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr long long kCholeskyLimit = 4096;

template <typename T>
void write_pod(std::ostream& os, const T& x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}
template <typename T>
void read_pod(std::istream& is, T& x) {
  is.read(reinterpret_cast<char*>(&x), sizeof(T));
}
}  // namespace

void ModelParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw std::domain_error("ModelParams: alpha must be in (0, 1/2]");
  if (!(beta > 0.0)) throw std::domain_error("ModelParams: beta must be > 0");
  if (!(epsilon >= 0.0))
    throw std::domain_error("ModelParams: epsilon must be >= 0");
}

struct GibbsSampler::CholeskyCache {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
  bool analyzed = false;
};

GibbsSampler::GibbsSampler(ModelParams params, std::uint64_t seed)
    : params_(std::move(params)),
      sd_(std::make_shared<const stable::StableDensity>(
          stable::StableParams{params_.alpha, 256, 0.0})),
      rng_(seed),
      chol_(std::make_shared<CholeskyCache>()) {
  params_.validate();
  state_.phi.assign(params_.lattice.vertex_count(), 0.0);
  state_.t.assign(params_.lattice.edge_count(), 0.0);
}

void GibbsSampler::set_state(FieldState s) {
  if (static_cast<long long>(s.phi.size()) != params_.lattice.vertex_count() ||
      static_cast<long long>(s.t.size()) != params_.lattice.edge_count())
    throw std::domain_error("set_state: array sizes do not match the lattice");
  state_ = std::move(s);
}

void GibbsSampler::update_t() {
  const TorusLattice& lat = params_.lattice;
  for (long long e = 0; e < lat.edge_count(); ++e) {
    long long j, k;
    lat.edge_endpoints(e, j, k);
    const double d = state_.phi[j] - state_.phi[k];
    const double c = 1.0 + params_.beta * d * d;
    state_.t[e] = std::log(stable::sample_tilted_stable(rng_, *sd_, c,
                                                        &tilt_stats_));
  }
}

void GibbsSampler::update_phi() {
  if (!(params_.epsilon > 0.0))
    throw std::domain_error("update_phi: epsilon must be > 0");
  const TorusLattice& lat = params_.lattice;
  const long long nv = lat.vertex_count();

  if (nv <= kCholeskyLimit) {
    // Assemble A = 2D (weights beta e^t, mass eps) and draw
    // x = P^{-1} L^{-T} z with A = P^T L L^T P, so Cov(x) = A^{-1}.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nv + 4 * lat.edge_count());
    std::vector<double> diag(nv, 2.0 * params_.epsilon);
    for (long long e = 0; e < lat.edge_count(); ++e) {
      long long j, k;
      lat.edge_endpoints(e, j, k);
      const double w = 2.0 * params_.beta * std::exp(state_.t[e]);
      diag[j] += w;
      diag[k] += w;
      trip.emplace_back(static_cast<int>(j), static_cast<int>(k), -w);
      trip.emplace_back(static_cast<int>(k), static_cast<int>(j), -w);
    }
    for (long long v = 0; v < nv; ++v)
      trip.emplace_back(static_cast<int>(v), static_cast<int>(v), diag[v]);
    Eigen::SparseMatrix<double> A(nv, nv);
    A.setFromTriplets(trip.begin(), trip.end());
    if (!chol_->analyzed) {
      chol_->llt.analyzePattern(A);
      chol_->analyzed = true;
    }
    chol_->llt.factorize(A);
    if (chol_->llt.info() != Eigen::Success)
      throw std::runtime_error(
          "update_phi: sparse Cholesky failed at sweep " +
          std::to_string(state_.sweep_count));
    Eigen::VectorXd z(nv);
    for (long long i = 0; i < nv; ++i) z[i] = normal(rng_);
    Eigen::VectorXd y = chol_->llt.matrixU().solve(z);
    Eigen::VectorXd x = chol_->llt.permutationPinv() * y;
    for (long long i = 0; i < nv; ++i) state_.phi[i] = x[i];
    return;
  }

  // Perturbation sampling: b = B^T sqrt(2w) xi_E + sqrt(2 eps) xi_V has
  // covariance 2D, so the solution of (2D) x = b has covariance (2D)^{-1}.
  EdgeWeightedOperator op{lat, {}, 2.0 * params_.epsilon};
  op.edge_weights.resize(lat.edge_count());
  std::vector<double> b(nv, 0.0);
  for (long long e = 0; e < lat.edge_count(); ++e) {
    const double w = 2.0 * params_.beta * std::exp(state_.t[e]);
    op.edge_weights[e] = w;
    long long j, k;
    lat.edge_endpoints(e, j, k);
    const double g = std::sqrt(w) * normal(rng_);
    b[j] += g;
    b[k] -= g;
  }
  const double se = std::sqrt(2.0 * params_.epsilon);
  for (long long v = 0; v < nv; ++v) b[v] += se * normal(rng_);
  TestVector rhs{std::move(b), false};
  state_.phi = solve_green(op, rhs, 1e-10).values;
}

void GibbsSampler::sweep() {
  update_t();
  update_phi();
  ++state_.sweep_count;
}

void GibbsSampler::save_checkpoint(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(params_.lattice.dim()));
  write_pod(os, static_cast<std::uint32_t>(params_.lattice.side()));
  write_pod(os, params_.alpha);
  write_pod(os, params_.beta);
  write_pod(os, params_.epsilon);
  write_pod(os, static_cast<std::int64_t>(state_.sweep_count));
  os.write(reinterpret_cast<const char*>(state_.phi.data()),
           static_cast<std::streamsize>(state_.phi.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(state_.t.data()),
           static_cast<std::streamsize>(state_.t.size() * sizeof(double)));
  for (std::uint64_t w : rng_.state()) write_pod(os, w);
  if (!os) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

GibbsSampler GibbsSampler::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0, d = 0, N = 0;
  read_pod(is, version);
  if (version != kVersion)
    throw std::runtime_error(
        "load_checkpoint: unsupported format version " +
        std::to_string(version) + " (expected " + std::to_string(kVersion) +
        "); re-run the producing experiment with this build");
  read_pod(is, d);
  read_pod(is, N);
  ModelParams params;
  read_pod(is, params.alpha);
  read_pod(is, params.beta);
  read_pod(is, params.epsilon);
  params.lattice = TorusLattice(static_cast<int>(d), static_cast<int>(N));
  GibbsSampler s(params, 0);
  std::int64_t sweeps = 0;
  read_pod(is, sweeps);
  s.state_.sweep_count = sweeps;
  is.read(reinterpret_cast<char*>(s.state_.phi.data()),
          static_cast<std::streamsize>(s.state_.phi.size() * sizeof(double)));
  is.read(reinterpret_cast<char*>(s.state_.t.data()),
          static_cast<std::streamsize>(s.state_.t.size() * sizeof(double)));
  std::array<std::uint64_t, 4> st{};
  for (auto& w : st) read_pod(is, w);
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
  s.rng_.set_state(st);
  return s;
}

namespace {
ChainStats collect(const ModelParams& params, long long n_keep, int thin,
                   const std::vector<Observable>& observables,
                   bool keep_traces,
                   const std::function<void()>& advance,
                   const std::function<const FieldState&()>& current) {
  ChainStats out;
  std::vector<std::vector<double>> traces(observables.size());
  for (auto& tr : traces) tr.reserve(n_keep);
  for (long long k = 0; k < n_keep; ++k) {
    for (int s = 0; s < thin; ++s) advance();
    const FieldState& st = current();
    for (std::size_t i = 0; i < observables.size(); ++i) {
      const double x = observables[i].fn(params, st);
      if (!std::isfinite(x)) {
        std::ostringstream oss;
        oss << "chain aborted: observable '" << observables[i].name
            << "' is not finite at sweep " << st.sweep_count << "; phi[0]="
            << (st.phi.empty() ? 0.0 : st.phi[0]) << " t[0]="
            << (st.t.empty() ? 0.0 : st.t[0]);
        throw std::runtime_error(oss.str());
      }
      traces[i].push_back(x);
    }
  }
  out.kept = n_keep;
  for (std::size_t i = 0; i < observables.size(); ++i) {
    ObservableStats os;
    RunningStats rs;
    for (double x : traces[i]) rs.add(x);
    os.mean = rs.mean;
    os.variance = rs.variance();
    os.std_error = batch_means_se(traces[i]);
    os.ess = effective_sample_size(traces[i]);
    if (keep_traces) os.trace = std::move(traces[i]);
    out.obs.emplace(observables[i].name, std::move(os));
  }
  return out;
}
}  // namespace

ChainStats run_chain(const ModelParams& params, std::uint64_t seed,
                     long long n_burn, long long n_keep, int thin,
                     const std::vector<Observable>& observables,
                     bool keep_traces) {
  if (n_keep < 1) throw std::domain_error("run_chain: n_keep must be >= 1");
  if (thin < 1) throw std::domain_error("run_chain: thin must be >= 1");
  GibbsSampler sampler(params, seed);
  for (long long i = 0; i < n_burn; ++i) sampler.sweep();
  return collect(
      params, n_keep, thin, observables, keep_traces,
      [&] { sampler.sweep(); }, [&]() -> const FieldState& { return sampler.state(); });
}

Observable obs_vertex_sq(long long vertex) {
  return {"phi" + std::to_string(vertex) + "_sq",
          [vertex](const ModelParams&, const FieldState& s) {
            return s.phi[vertex] * s.phi[vertex];
          }};
}

Observable obs_edge_gradient_sq(long long edge) {
  return {"grad_sq_e" + std::to_string(edge),
          [edge](const ModelParams& p, const FieldState& s) {
            long long j, k;
            p.lattice.edge_endpoints(edge, j, k);
            const double d = s.phi[j] - s.phi[k];
            return d * d;
          }};
}

Observable obs_exp_lambda_t(long long edge, double lambda) {
  std::ostringstream name;
  name << "exp_" << lambda << "t_e" << edge;
  return {name.str(), [edge, lambda](const ModelParams&, const FieldState& s) {
            return std::exp(lambda * s.t[edge]);
          }};
}

Observable obs_t_value(long long edge) {
  return {"t_e" + std::to_string(edge),
          [edge](const ModelParams&, const FieldState& s) { return s.t[edge]; }};
}

Observable obs_linear_power(const TestVector& v, int power) {
  return {"vphi_pow" + std::to_string(power),
          [v, power](const ModelParams&, const FieldState& s) {
            double acc = 0.0;
            for (std::size_t i = 0; i < v.values.size(); ++i)
              acc += v.values[i] * s.phi[i];
            double r = 1.0;
            for (int p = 0; p < power; ++p) r *= acc;
            return r;
          }};
}

ChainStats metropolis_phi_chain(const ModelParams& params, std::uint64_t seed,
                                long long n_burn, long long n_keep, int thin,
                                double step,
                                const std::vector<Observable>& observables) {
  params.validate();
  const TorusLattice& lat = params.lattice;
  const long long nv = lat.vertex_count();
  Xoshiro256pp rng(seed);
  FieldState state;
  state.phi.assign(nv, 0.0);

  auto local_energy = [&](long long v, double phiv) {
    double h = params.epsilon * phiv * phiv;
    for (int a = 0; a < lat.dim(); ++a) {
      for (int dir : {+1, -1}) {
        const double d = phiv - state.phi[lat.neighbor(v, a, dir)];
        h += std::pow(1.0 + params.beta * d * d, params.alpha);
      }
    }
    return h;
  };
  auto sweep_once = [&] {
    for (long long v = 0; v < nv; ++v) {
      const double cur = state.phi[v];
      const double prop = cur + step * (2.0 * uniform01(rng) - 1.0);
      const double dH = local_energy(v, prop) - local_energy(v, cur);
      if (dH <= 0.0 || uniform01_pos(rng) < std::exp(-dH)) state.phi[v] = prop;
    }
    ++state.sweep_count;
  };

  for (long long i = 0; i < n_burn; ++i) sweep_once();
  return collect(params, n_keep, thin, observables, false, sweep_once,
                 [&]() -> const FieldState& { return state; });
}

}  // namespace gradlat
