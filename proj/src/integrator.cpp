#include "monge/integrator.hpp"

#include "monge/errors.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace monge {

void IntegratorConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be > 0");
  if (l_f < 1) throw std::invalid_argument("l_f must be >= 1");
  if (!(divergence_threshold > 0.0)) throw std::invalid_argument("divergence_threshold must be > 0");
}

const char* to_string(DivergenceReason reason) {
  switch (reason) {
    case DivergenceReason::None: return "none";
    case DivergenceReason::NonFiniteEvaluation: return "non-finite evaluation";
    case DivergenceReason::DegenerateDenominator: return "degenerate denominator";
    case DivergenceReason::DegenerateDeterminant: return "degenerate determinant";
    case DivergenceReason::NonFiniteEnergy: return "non-finite energy";
    case DivergenceReason::EnergyError: return "energy error above threshold";
  }
  return "unknown";
}

double energy(const PhaseState& state, const MongeConfig& cfg) {
  const auto& pt = state.point;
  const auto& v = state.velocity;
  double e = 0.0;
  if (cfg.alpha == 0.0) {
    e = -pt.ell() + 0.5 * v.squaredNorm();
  } else {
    const double a2 = cfg.alpha * cfg.alpha;
    const double gv = pt.grad().dot(v);
    e = -pt.ell() - 0.5 * metric_log_det(pt, cfg) + 0.5 * v.squaredNorm() + 0.5 * a2 * gv * gv;
  }
  if (!std::isfinite(e)) throw NonFiniteEnergy("energy is not finite");
  return e;
}

double euclidean_energy(double log_density, const Vector& momentum) {
  return -log_density + 0.5 * momentum.squaredNorm();
}

namespace {

// Table 1 velocity update with H v precomputed.
Vector half_step(const DifferentiablePoint& pt, const Vector& v, const Vector& hv, const MongeConfig& cfg,
                 double eps) {
  if (cfg.alpha == 0.0) return v + (0.5 * eps) * pt.grad();
  const double a2 = cfg.alpha * cfg.alpha;
  const double l_alpha = pt.l_alpha(cfg.alpha);
  const Vector& g = pt.grad();
  const Vector rhs = (a2 * g.dot(v) + 0.5 * eps) * g - (eps * a2 / (2.0 * l_alpha)) * (pt.hess() * g) + v;
  Vector out = rank_one_system_solve_hv(pt, hv, cfg, eps, rhs);
  if (!out.allFinite()) throw NonFiniteEvaluation("velocity update produced a non-finite value");
  return out;
}

// log |1 + sign * (eps alpha^2 / (2 L)) <g, H v>|, i.e. the shifted determinant over L.
double jacobian_log_factor(const DifferentiablePoint& pt, const Vector& hv, const MongeConfig& cfg,
                           double eps, double sign, int& negatives) {
  const double a2 = cfg.alpha * cfg.alpha;
  const double l_alpha = pt.l_alpha(cfg.alpha);
  const double t = sign * 0.5 * eps * a2 * pt.grad().dot(hv) / l_alpha;
  if (!(std::abs(l_alpha * (1.0 + t)) >= cfg.denom_floor)) {
    throw DegenerateDeterminant("shifted determinant below floor");
  }
  if (t < -1.0) {
    ++negatives;
    return std::log(-(1.0 + t));
  }
  return std::log1p(t);
}

using StepObserver = std::function<void(const PhaseState&)>;

// Runs the L_F steps. Returns the final state; fills log_det and negatives.
PhaseState run_steps(const TargetDensity& target, const PhaseState& start, const MongeConfig& cfg,
                     const IntegratorConfig& icfg, double& log_det, int& negatives,
                     const StepObserver& observe) {
  const double eps = icfg.eps;
  const bool euclidean = cfg.alpha == 0.0;
  PhaseState cur = start;
  for (int n = 0; n < icfg.l_f; ++n) {
    Vector v_half;
    if (euclidean) {
      v_half = half_step(cur.point, cur.velocity, cur.velocity, cfg, eps);
    } else {
      const Vector hv = cur.point.hess() * cur.velocity;
      log_det -= jacobian_log_factor(cur.point, hv, cfg, eps, +1.0, negatives);
      v_half = half_step(cur.point, cur.velocity, hv, cfg, eps);
      log_det += jacobian_log_factor(cur.point, cur.point.hess() * v_half, cfg, eps, -1.0, negatives);
    }

    cur.velocity = v_half;
    cur.point = evaluate_point(target, position_full_step(cur, eps));

    if (euclidean) {
      cur.velocity = half_step(cur.point, v_half, v_half, cfg, eps);
    } else {
      const Vector hv = cur.point.hess() * v_half;
      log_det -= jacobian_log_factor(cur.point, hv, cfg, eps, +1.0, negatives);
      cur.velocity = half_step(cur.point, v_half, hv, cfg, eps);
      log_det += jacobian_log_factor(cur.point, cur.point.hess() * cur.velocity, cfg, eps, -1.0, negatives);
    }
    if (!cur.velocity.allFinite()) throw NonFiniteEvaluation("velocity is not finite");
    if (observe) observe(cur);
  }
  return cur;
}

template <class Fn>
DivergenceReason guarded(Fn&& fn) {
  try {
    fn();
  } catch (const NonFiniteEvaluation&) {
    return DivergenceReason::NonFiniteEvaluation;
  } catch (const DegenerateDenominator&) {
    return DivergenceReason::DegenerateDenominator;
  } catch (const DegenerateDeterminant&) {
    return DivergenceReason::DegenerateDeterminant;
  } catch (const NonFiniteEnergy&) {
    return DivergenceReason::NonFiniteEnergy;
  }
  return DivergenceReason::None;
}

}  // namespace

Vector velocity_half_step(const PhaseState& state, const MongeConfig& cfg, double eps) {
  if (cfg.alpha == 0.0) return half_step(state.point, state.velocity, state.velocity, cfg, eps);
  return half_step(state.point, state.velocity, state.point.hess() * state.velocity, cfg, eps);
}

Vector position_full_step(const PhaseState& state, double eps) {
  return state.point.x() + eps * state.velocity;
}

TrajectoryResult integrate_trajectory(const TargetDensity& target, const PhaseState& start,
                                      const MongeConfig& mcfg, const IntegratorConfig& icfg,
                                      bool record_trace) {
  icfg.validate();
  TrajectoryResult result;
  result.final_state = start;
  if (record_trace) {
    result.trace.reserve(static_cast<std::size_t>(icfg.l_f) + 1);
    result.trace.push_back(start.point.x());
  }
  StepObserver observe;
  if (record_trace) observe = [&](const PhaseState& s) { result.trace.push_back(s.point.x()); };

  result.reason = guarded([&] {
    result.energy_start = energy(start, mcfg);
    result.final_state = run_steps(target, start, mcfg, icfg, result.log_det_jacobian,
                                   result.negative_jacobian_factors, observe);
    result.energy_end = energy(result.final_state, mcfg);
  });
  if (result.reason == DivergenceReason::None &&
      !(std::abs(result.energy_end - result.energy_start) <= icfg.divergence_threshold)) {
    result.reason = DivergenceReason::EnergyError;
  }
  result.diverged = result.reason != DivergenceReason::None;
  return result;
}

GeodesicTrace geodesic_trace(const TargetDensity& target, const PhaseState& start, const MongeConfig& mcfg,
                             const IntegratorConfig& icfg) {
  icfg.validate();
  GeodesicTrace out;
  out.positions.push_back(start.point.x());
  out.velocities.push_back(start.velocity);
  double log_det = 0.0;
  int negatives = 0;
  out.reason = guarded([&] {
    auto record = [&](const PhaseState& s) {
      const double e = energy(s, mcfg);
      out.energies.push_back(e);
      out.hamiltonians.push_back(e + metric_log_det(s.point, mcfg));
    };
    record(start);
    run_steps(target, start, mcfg, icfg, log_det, negatives, [&](const PhaseState& s) {
      out.positions.push_back(s.point.x());
      out.velocities.push_back(s.velocity);
      record(s);
    });
  });
  if (!out.energies.empty()) {
    out.energy_drift = out.energies.back() - out.energies.front();
    out.hamiltonian_drift = out.hamiltonians.back() - out.hamiltonians.front();
  }
  if (out.reason == DivergenceReason::None && !(std::abs(out.energy_drift) <= icfg.divergence_threshold)) {
    out.reason = DivergenceReason::EnergyError;
  }
  out.diverged = out.reason != DivergenceReason::None;
  return out;
}

bool mh_accept(double e_start, double e_end, double log_det_jacobian, double u) {
  return std::log(u) < (e_start - e_end) + log_det_jacobian;
}

EuclideanTrajectory euclidean_leapfrog(const TargetDensity& target, const EuclideanPhaseState& start,
                                       const IntegratorConfig& icfg, bool record_steps) {
  icfg.validate();
  const double eps = icfg.eps;
  EuclideanTrajectory out;
  out.final_state = start;
  auto& x = out.final_state.position;
  auto& p = out.final_state.momentum;
  Vector grad = target.gradient(x);
  out.log_density_end = target.log_density(x);
  if (record_steps) out.steps.push_back(start);
  try {
    for (int n = 0; n < icfg.l_f; ++n) {
      const Vector p_half = p + (0.5 * eps) * grad;
      x = x + eps * p_half;
      grad = target.gradient(x);
      p = p_half + (0.5 * eps) * grad;
      if (!x.allFinite() || !p.allFinite() || !grad.allFinite()) {
        out.diverged = true;
        break;
      }
      if (record_steps) out.steps.push_back(out.final_state);
    }
    if (!out.diverged) {
      out.log_density_end = target.log_density(x);
      out.diverged = !std::isfinite(out.log_density_end);
    }
  } catch (const OriginSingularity&) {
    out.diverged = true;
  }
  return out;
}

}  // namespace monge
