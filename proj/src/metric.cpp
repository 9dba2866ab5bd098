#include "monge/metric.hpp"

#include "monge/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace monge {

void MongeConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(grad_norm_floor > 0.0)) throw std::invalid_argument("grad_norm_floor must be > 0");
  if (!(denom_floor > 0.0)) throw std::invalid_argument("denom_floor must be > 0");
}

DifferentiablePoint evaluate_point(const TargetDensity& target, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != target.dimension()) {
    throw std::invalid_argument("evaluate_point: position has dimension " + std::to_string(x.size()) +
                                ", target expects " + std::to_string(target.dimension()));
  }
  if (!x.allFinite()) throw NonFiniteEvaluation("evaluate_point: non-finite position");

  Evaluation e;
  try {
    e = target.evaluate(x);
  } catch (const OriginSingularity& err) {
    throw NonFiniteEvaluation(err.what());
  }
  if (!std::isfinite(e.log_density) || !e.gradient.allFinite() || !e.hessian.allFinite()) {
    throw NonFiniteEvaluation("evaluate_point: target returned a non-finite value");
  }

  DifferentiablePoint pt;
  pt.x_ = x;
  pt.ell_ = e.log_density;
  pt.grad_ = std::move(e.gradient);
  pt.hess_ = 0.5 * (e.hessian + e.hessian.transpose());
  pt.grad_sq_norm_ = pt.grad_.squaredNorm();
  if (!std::isfinite(pt.grad_sq_norm_)) throw NonFiniteEvaluation("evaluate_point: gradient norm overflows");
  return pt;
}

Matrix metric_tensor(const DifferentiablePoint& pt, const MongeConfig& cfg) {
  const auto d = static_cast<Eigen::Index>(pt.dimension());
  Matrix g = Matrix::Identity(d, d);
  if (cfg.alpha == 0.0) return g;
  const double a2 = cfg.alpha * cfg.alpha;
  const Vector& grad = pt.grad();
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = j; i < d; ++i) {
      g(i, j) += a2 * grad[i] * grad[j];
      g(j, i) = g(i, j);
    }
  return g;
}

Vector metric_inverse_apply(const DifferentiablePoint& pt, const MongeConfig& cfg, const Vector& w) {
  if (cfg.alpha == 0.0) return w;
  const double a2 = cfg.alpha * cfg.alpha;
  return w - (a2 * pt.grad().dot(w) / pt.l_alpha(cfg.alpha)) * pt.grad();
}

double metric_log_det(const DifferentiablePoint& pt, const MongeConfig& cfg) {
  if (cfg.alpha == 0.0) return 0.0;
  return std::log1p(cfg.alpha * cfg.alpha * pt.grad_sq_norm());
}

double inverse_sqrt_coefficient(const DifferentiablePoint& pt, const MongeConfig& cfg) {
  const double a2 = cfg.alpha * cfg.alpha;
  if (pt.grad_sq_norm() < cfg.grad_norm_floor) return -0.5 * a2;
  // (L^{-1/2} - 1) / |g|^2 rewritten without the cancellation.
  const double root = std::sqrt(pt.l_alpha(cfg.alpha));
  return -a2 / (root * (1.0 + root));
}

Vector metric_inverse_sqrt_apply(const DifferentiablePoint& pt, const MongeConfig& cfg, const Vector& z) {
  if (cfg.alpha == 0.0) return z;
  return z + (inverse_sqrt_coefficient(pt, cfg) * pt.grad().dot(z)) * pt.grad();
}

Vector grad_log_det(const DifferentiablePoint& pt, const MongeConfig& cfg) {
  if (cfg.alpha == 0.0) return Vector::Zero(pt.grad().size());
  const double a2 = cfg.alpha * cfg.alpha;
  return (2.0 * a2 / pt.l_alpha(cfg.alpha)) * (pt.hess() * pt.grad());
}

Matrix christoffel(const DifferentiablePoint& pt, const MongeConfig& cfg, std::size_t k) {
  if (k >= pt.dimension()) {
    throw std::out_of_range("christoffel: index " + std::to_string(k) + " out of range for dimension " +
                            std::to_string(pt.dimension()));
  }
  const auto d = static_cast<Eigen::Index>(pt.dimension());
  if (cfg.alpha == 0.0) return Matrix::Zero(d, d);
  const double a2 = cfg.alpha * cfg.alpha;
  return (a2 / pt.l_alpha(cfg.alpha) * pt.grad()[static_cast<Eigen::Index>(k)]) * pt.hess();
}

OmegaFactors omega_factors(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg) {
  if (static_cast<std::size_t>(v.size()) != pt.dimension()) {
    throw std::invalid_argument("omega_factors: velocity dimension mismatch");
  }
  const double a2 = cfg.alpha * cfg.alpha;
  return {a2 / pt.l_alpha(cfg.alpha), pt.grad(), pt.hess() * v};
}

ShiftedDeterminant shifted_det(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg,
                               int sign, double eps) {
  if (cfg.alpha == 0.0) return {0.0, 1};
  const double a2 = cfg.alpha * cfg.alpha;
  const double s = sign >= 0 ? 1.0 : -1.0;
  const double arg = pt.l_alpha(cfg.alpha) + s * 0.5 * eps * a2 * pt.grad().dot(pt.hess() * v);
  if (!(std::abs(arg) >= cfg.denom_floor)) {
    throw DegenerateDeterminant("shifted determinant " + std::to_string(arg) + " below floor");
  }
  return {std::log(std::abs(arg)), arg < 0.0 ? -1 : 1};
}

double shifted_log_det(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg, int sign,
                       double eps) {
  return shifted_det(pt, v, cfg, sign, eps).log_abs;
}

Vector rank_one_system_solve_hv(const DifferentiablePoint& pt, const Vector& hv, const MongeConfig& cfg,
                                double eps, const Vector& w) {
  if (cfg.alpha == 0.0) return w;
  const Vector row = pt.grad() + (0.5 * eps) * hv;
  const double denom = row.dot(pt.grad()) + 1.0 / (cfg.alpha * cfg.alpha);
  if (!(std::abs(denom) >= cfg.denom_floor)) {
    throw DegenerateDenominator("rank-one solve denominator " + std::to_string(denom) + " below floor");
  }
  return w - (row.dot(w) / denom) * pt.grad();
}

Vector rank_one_system_solve(const DifferentiablePoint& pt, const Vector& v, const MongeConfig& cfg,
                             double eps, const Vector& w) {
  if (cfg.alpha == 0.0) return w;
  return rank_one_system_solve_hv(pt, pt.hess() * v, cfg, eps, w);
}

}  // namespace monge
