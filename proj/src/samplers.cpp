#include "monge/samplers.hpp"

#include "monge/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace monge {

void SamplerConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be > 0");
  if (l_f < 1) throw std::invalid_argument("l_f must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (warmup < 0) throw std::invalid_argument("warmup must be >= 0");
  if (!(divergence_energy_threshold > 0.0)) {
    throw std::invalid_argument("divergence_energy_threshold must be > 0");
  }
}

MongeConfig SamplerConfig::monge() const {
  MongeConfig m;
  m.alpha = alpha;
  return m;
}

IntegratorConfig SamplerConfig::integrator() const {
  IntegratorConfig i;
  i.eps = eps;
  i.l_f = l_f;
  i.divergence_threshold = divergence_energy_threshold;
  return i;
}

namespace {

// Shared bookkeeping for both samplers.
class ChainRecorder {
 public:
  ChainRecorder(const SamplerConfig& cfg, std::size_t dim) : warmup_(cfg.warmup) {
    const auto n = static_cast<std::size_t>(cfg.n_samples);
    chain_.samples.resize(cfg.n_samples, static_cast<Eigen::Index>(dim));
    chain_.accepted.reserve(n);
    chain_.accept_prob.reserve(n);
    chain_.energies.reserve(n);
    chain_.log_det_jacobian.reserve(n);
  }

  void record(long transition, const Vector& position, bool accepted, bool diverged, double prob,
              double e_start, double e_end, double log_det, bool stationary, int negatives) {
    if (transition < warmup_) {
      if (diverged) ++chain_.warmup_divergence_count;
      return;
    }
    const auto row = static_cast<Eigen::Index>(transition - warmup_);
    chain_.samples.row(row) = position.transpose();
    chain_.accepted.push_back(accepted);
    chain_.accept_prob.push_back(prob);
    chain_.energies.emplace_back(e_start, e_end);
    chain_.log_det_jacobian.push_back(log_det);
    if (diverged) ++chain_.divergence_count;
    if (accepted && stationary) ++chain_.stationary_accepts;
    chain_.negative_jacobian_factors += negatives;
  }

  Chain finish(std::chrono::steady_clock::time_point started) {
    chain_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return std::move(chain_);
  }

 private:
  long warmup_;
  Chain chain_;
};

double acceptance_probability(double log_ratio) {
  if (!(log_ratio < 0.0)) return 1.0;
  return std::exp(log_ratio);
}

void check_start(const TargetDensity& target, const Vector& x0) {
  if (static_cast<std::size_t>(x0.size()) != target.dimension()) {
    throw InitialPointInvalid("initial point has dimension " + std::to_string(x0.size()) +
                              ", target expects " + std::to_string(target.dimension()));
  }
}

}  // namespace

Chain lmc_monge_sample(const TargetDensity& target, const SamplerConfig& cfg, const Vector& x0) {
  cfg.validate();
  check_start(target, x0);
  const auto started = std::chrono::steady_clock::now();
  const MongeConfig mcfg = cfg.monge();
  const IntegratorConfig icfg = cfg.integrator();

  DifferentiablePoint current;
  try {
    current = evaluate_point(target, x0);
  } catch (const NonFiniteEvaluation& err) {
    throw InitialPointInvalid(std::string("initial point: ") + err.what());
  }

  CounterRng rng(cfg.seed, cfg.stream);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ChainRecorder recorder(cfg, target.dimension());

  const long total = cfg.warmup + cfg.n_samples;
  for (long t = 0; t < total; ++t) {
    PhaseState start{current, sample_velocity(current, mcfg, rng)};
    const TrajectoryResult traj = integrate_trajectory(target, start, mcfg, icfg);

    bool accept = false;
    double prob = 0.0;
    if (!traj.diverged) {
      const double log_ratio = traj.energy_start - traj.energy_end + traj.log_det_jacobian;
      prob = acceptance_probability(log_ratio);
      accept = mh_accept(traj.energy_start, traj.energy_end, traj.log_det_jacobian, uniform(rng));
    }
    bool stationary = false;
    if (accept) {
      stationary = traj.final_state.point.x() == current.x();
      current = traj.final_state.point;
    }
    recorder.record(t, current.x(), accept, traj.diverged, prob, traj.energy_start, traj.energy_end,
                    traj.log_det_jacobian, stationary, traj.negative_jacobian_factors);
  }
  return recorder.finish(started);
}

Chain hmc_euclidean_sample(const TargetDensity& target, const SamplerConfig& cfg, const Vector& x0) {
  cfg.validate();
  check_start(target, x0);
  const auto started = std::chrono::steady_clock::now();
  const IntegratorConfig icfg = cfg.integrator();

  Vector position = x0;
  double log_density = 0.0;
  try {
    log_density = target.log_density(x0);
  } catch (const OriginSingularity& err) {
    throw InitialPointInvalid(std::string("initial point: ") + err.what());
  }
  if (!std::isfinite(log_density) || !x0.allFinite()) {
    throw InitialPointInvalid("initial point has a non-finite log-density");
  }

  CounterRng rng(cfg.seed, cfg.stream);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ChainRecorder recorder(cfg, target.dimension());
  const auto dim = static_cast<Eigen::Index>(target.dimension());

  const long total = cfg.warmup + cfg.n_samples;
  for (long t = 0; t < total; ++t) {
    std::normal_distribution<double> normal;
    Vector momentum(dim);
    for (Eigen::Index i = 0; i < dim; ++i) momentum[i] = normal(rng);

    const double e_start = euclidean_energy(log_density, momentum);
    const EuclideanTrajectory traj = euclidean_leapfrog(target, {position, momentum}, icfg);
    double e_end = std::numeric_limits<double>::quiet_NaN();
    bool diverged = traj.diverged;
    if (!diverged) {
      e_end = euclidean_energy(traj.log_density_end, traj.final_state.momentum);
      diverged = !std::isfinite(e_end) || !(std::abs(e_end - e_start) <= icfg.divergence_threshold);
    }

    bool accept = false;
    double prob = 0.0;
    if (!diverged) {
      prob = acceptance_probability(e_start - e_end);
      accept = mh_accept(e_start, e_end, 0.0, uniform(rng));
    }
    bool stationary = false;
    if (accept) {
      stationary = traj.final_state.position == position;
      position = traj.final_state.position;
      log_density = traj.log_density_end;
    }
    recorder.record(t, position, accept, diverged, prob, e_start, e_end, 0.0, stationary, 0);
  }
  return recorder.finish(started);
}

}  // namespace monge
