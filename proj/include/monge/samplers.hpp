#pragma once

#include "monge/integrator.hpp"
#include "monge/rng.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace monge {

struct SamplerConfig {
  double alpha = 1.0;
  double eps = 0.1;
  int l_f = 10;
  long n_samples = 1000;
  long warmup = 0;
  std::uint64_t seed = 1;
  /// RNG stream id; independent chains use distinct streams or seeds.
  std::uint64_t stream = 0;
  double divergence_energy_threshold = 1000.0;

  void validate() const;
  MongeConfig monge() const;
  IntegratorConfig integrator() const;
};

/// Post-warmup output of one chain.
struct Chain {
  Matrix samples;                // n_samples x D
  std::vector<bool> accepted;    // per transition
  std::vector<double> accept_prob;  // min(1, exp(log ratio)), 0 for divergences
  std::vector<std::pair<double, double>> energies;  // (E_start, E_end)
  std::vector<double> log_det_jacobian;
  long divergence_count = 0;
  long warmup_divergence_count = 0;
  /// Accepted transitions whose proposal equals the current position.
  long stationary_accepts = 0;
  long negative_jacobian_factors = 0;
  double wall_seconds = 0.0;

  long size() const { return static_cast<long>(samples.rows()); }
  long dimension() const { return static_cast<long>(samples.cols()); }
};

/// v = sqrt(G^{-1}) z with z ~ N(0, I); covariance G^{-1}.
template <class Rng>
Vector sample_velocity(const DifferentiablePoint& pt, const MongeConfig& cfg, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(static_cast<Eigen::Index>(pt.dimension()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return metric_inverse_sqrt_apply(pt, cfg, z);
}

/// Lagrangian Monte Carlo in the Monge metric. Throws InitialPointInvalid.
Chain lmc_monge_sample(const TargetDensity& target, const SamplerConfig& cfg, const Vector& x0);

/// Euclidean HMC with identity mass matrix. Throws InitialPointInvalid.
Chain hmc_euclidean_sample(const TargetDensity& target, const SamplerConfig& cfg, const Vector& x0);

}  // namespace monge
