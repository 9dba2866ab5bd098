#pragma once

// Closed-form linear algebra for the Monge metric G(x) = I + alpha^2 g g^T,
// g = grad log pi(x). Everything is O(D) or O(D^2); dense matrices are only
// produced by metric_tensor() and christoffel().

#include "monge/targets.hpp"

#include <cstddef>

namespace monge {

struct MongeConfig {
  double alpha = 1.0;
  /// Below this value of |g|^2 the inverse square root uses its small-gradient limit.
  double grad_norm_floor = 1e-10;
  /// Rank-one denominators and shifted determinants smaller than this are degenerate.
  double denom_floor = 1e-12;

  /// Throws std::invalid_argument unless alpha >= 0 and both floors > 0.
  void validate() const;
};

/// Immutable cache of (x, ell, grad, H) at one position. Build with
/// evaluate_point(); the Hessian is stored symmetrized.
class DifferentiablePoint {
 public:
  DifferentiablePoint() = default;

  const Vector& x() const { return x_; }
  double ell() const { return ell_; }
  const Vector& grad() const { return grad_; }
  const Matrix& hess() const { return hess_; }
  std::size_t dimension() const { return static_cast<std::size_t>(x_.size()); }

  double grad_sq_norm() const { return grad_sq_norm_; }
  /// L_alpha = 1 + alpha^2 |g|^2, the non-trivial eigenvalue (and determinant) of G.
  double l_alpha(double alpha) const { return 1.0 + alpha * alpha * grad_sq_norm_; }

 private:
  friend DifferentiablePoint evaluate_point(const TargetDensity&, const Vector&);

  Vector x_;
  double ell_ = 0.0;
  Vector grad_;
  Matrix hess_;
  double grad_sq_norm_ = 0.0;
};

/// Evaluates the target at x. Throws NonFiniteEvaluation when any of ell,
/// grad, H is not finite, or when the target itself refuses the point.
DifferentiablePoint evaluate_point(const TargetDensity& target, const Vector& x);

/// Dense I + alpha^2 g g^T.
Matrix metric_tensor(const DifferentiablePoint& pt, const MongeConfig& cfg);

/// G^{-1} w via Sherman-Morrison.
Vector metric_inverse_apply(const DifferentiablePoint& pt, const MongeConfig& cfg, const Vector& w);

/// log det G = log L_alpha.
double metric_log_det(const DifferentiablePoint& pt, const MongeConfig& cfg);

/// Scalar c in A = I + c g g^T with A A^T = G^{-1}. Switches to the
/// limit -alpha^2/2 when |g|^2 < grad_norm_floor.
double inverse_sqrt_coefficient(const DifferentiablePoint& pt, const MongeConfig& cfg);

/// A z with A = sqrt(G^{-1}) symmetric, see inverse_sqrt_coefficient().
Vector metric_inverse_sqrt_apply(const DifferentiablePoint& pt, const MongeConfig& cfg, const Vector& z);

/// grad log det G = (2 alpha^2 / L_alpha) H g.
Vector grad_log_det(const DifferentiablePoint& pt, const MongeConfig& cfg);

/// k-th Christoffel matrix Gamma^k = (alpha^2 / L_alpha) g_k H, k zero-based.
/// Throws std::out_of_range for k >= D.
Matrix christoffel(const DifferentiablePoint& pt, const MongeConfig& cfg, std::size_t k);

/// Omega(x, v) = scale * left * right^T. Omega_ij = sum_k v_k Gamma^i_kj.
struct OmegaFactors {
  double scale = 0.0;
  Vector left;   // g
  Vector right;  // H v
};

OmegaFactors omega_factors(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg);

struct ShiftedDeterminant {
  double log_abs = 0.0;
  int sign = 1;
};

/// det(G + sign * (eps/2) * Omega~) with Omega~ = G Omega = alpha^2 g (Hv)^T,
/// which equals L_alpha + sign * (eps alpha^2 / 2) <g, H v>.
/// Throws DegenerateDeterminant when its magnitude is below denom_floor.
ShiftedDeterminant shifted_det(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg,
                               int sign, double eps);

/// log |det(G +/- (eps/2) Omega~)|.
double shifted_log_det(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg, int sign,
                       double eps);

/// (G + (eps/2) Omega~(x, v))^{-1} w by Sherman-Morrison. alpha == 0 returns w.
/// Throws DegenerateDenominator when |g.(g + (eps/2) H v) + 1/alpha^2| < denom_floor.
Vector rank_one_system_solve(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg,
                             double eps, const Vector& w);

/// Same as rank_one_system_solve() with H v supplied by the caller.
Vector rank_one_system_solve_hv(const DifferentiablePoint& pt, const Vector& hv, const MongeConfig& cfg,
                                double eps, const Vector& w);

}  // namespace monge
