#pragma once

#include "monge/metric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace monge {

/// Position/velocity pair carried through the Lagrangian integrator.
struct PhaseState {
  DifferentiablePoint point;
  Vector velocity;
};

/// Position/momentum pair for the Euclidean baseline.
struct EuclideanPhaseState {
  Vector position;
  Vector momentum;
};

struct IntegratorConfig {
  double eps = 0.1;
  int l_f = 10;
  /// |E_end - E_start| above this marks the trajectory divergent.
  double divergence_threshold = 1000.0;

  /// Throws std::invalid_argument unless eps > 0 and l_f >= 1.
  void validate() const;
};

enum class DivergenceReason {
  None,
  NonFiniteEvaluation,
  DegenerateDenominator,
  DegenerateDeterminant,
  NonFiniteEnergy,
  EnergyError,
};

const char* to_string(DivergenceReason reason);

struct TrajectoryResult {
  PhaseState final_state;
  double log_det_jacobian = 0.0;
  double energy_start = 0.0;
  double energy_end = 0.0;
  bool diverged = false;
  DivergenceReason reason = DivergenceReason::None;
  /// Jacobian factors that came out negative (accepted via |.|).
  int negative_jacobian_factors = 0;
  /// Positions x^(1) .. x^(L_F + 1) when tracing was requested.
  std::vector<Vector> trace;
};

/// E(x, v) = -ell - (1/2) log L_alpha + (1/2)|v|^2 + (alpha^2 / 2) <g, v>^2.
/// Throws NonFiniteEnergy.
double energy(const PhaseState& state, const MongeConfig& cfg);

/// v^(n+1/2) from (x^(n), v^(n)); also used for the second half-step with
/// (x^(n+1), v^(n+1/2)). alpha == 0 gives v + (eps/2) g.
Vector velocity_half_step(const PhaseState& state, const MongeConfig& cfg, double eps);

/// x + eps * v.
Vector position_full_step(const PhaseState& state, double eps);

/// L_F explicit steps with the per-step log-Jacobian accumulated in
/// log-space. Numerical failures mark the result diverged instead of throwing.
TrajectoryResult integrate_trajectory(const TargetDensity& target, const PhaseState& start,
                                      const MongeConfig& mcfg, const IntegratorConfig& icfg,
                                      bool record_trace = false);

struct GeodesicTrace {
  std::vector<Vector> positions;
  std::vector<Vector> velocities;
  std::vector<double> energies;
  /// E + log L_alpha, the Hamiltonian of (x, p = G v); conserved by the flow.
  std::vector<double> hamiltonians;
  double energy_drift = 0.0;       // E(end) - E(start)
  double hamiltonian_drift = 0.0;  // H(end) - H(start)
  bool diverged = false;
  DivergenceReason reason = DivergenceReason::None;
};

/// Follows the dynamics from `start` without an acceptance step. Records
/// position, velocity and energy after every step (first entry = start).
GeodesicTrace geodesic_trace(const TargetDensity& target, const PhaseState& start, const MongeConfig& mcfg,
                             const IntegratorConfig& icfg);

/// Metropolis test with determinant adjustment:
/// accept iff log u < (e_start - e_end) + log_det_jacobian.
bool mh_accept(double e_start, double e_end, double log_det_jacobian, double u);

/// -ell(x) + |p|^2 / 2.
double euclidean_energy(double log_density, const Vector& momentum);

struct EuclideanTrajectory {
  EuclideanPhaseState final_state;
  double log_density_end = 0.0;
  bool diverged = false;
  std::vector<EuclideanPhaseState> steps;  // filled when requested
};

/// Standard leapfrog with unit mass, repeated L_F times.
EuclideanTrajectory euclidean_leapfrog(const TargetDensity& target, const EuclideanPhaseState& start,
                                       const IntegratorConfig& icfg, bool record_steps = false);

}  // namespace monge
