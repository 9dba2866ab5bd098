#pragma once

// Dense and finite-difference oracles. They work from the target's analytic
// gradient/log-density directly and never call the closed-form metric code.

#include "monge/metric.hpp"
#include "monge/targets.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace monge::testing {

inline Matrix dense_metric(const Vector& grad, double alpha) {
  const auto d = grad.size();
  return Matrix::Identity(d, d) + alpha * alpha * grad * grad.transpose();
}

inline Matrix dense_metric_at(const TargetDensity& t, const Vector& x, double alpha) {
  return dense_metric(t.gradient(x), alpha);
}

/// Fourth-order central-difference derivative of G(x) along coordinate m.
inline Matrix metric_derivative_fd(const TargetDensity& t, const Vector& x, double alpha, Eigen::Index m,
                                   double h = 1e-4) {
  const double step = h * std::max(1.0, std::abs(x[m]));
  auto at = [&](double k) {
    Vector y = x;
    y[m] += k * step;
    return dense_metric_at(t, y, alpha);
  };
  return (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * step);
}

/// Gamma^k_ij = 1/2 sum_l G^{kl} (d_i G_lj + d_j G_il - d_l G_ij), returned as a
/// vector over k of D x D matrices.
inline std::vector<Matrix> levi_civita_fd(const TargetDensity& t, const Vector& x, double alpha) {
  const auto d = x.size();
  const Matrix g_inv = dense_metric_at(t, x, alpha).inverse();
  std::vector<Matrix> dg;
  for (Eigen::Index m = 0; m < d; ++m) dg.push_back(metric_derivative_fd(t, x, alpha, m));
  std::vector<Matrix> gamma(static_cast<std::size_t>(d), Matrix::Zero(d, d));
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        double s = 0.0;
        for (Eigen::Index l = 0; l < d; ++l) {
          s += g_inv(k, l) * (dg[i](l, j) + dg[j](i, l) - dg[l](i, j));
        }
        gamma[k](i, j) = 0.5 * s;
      }
  return gamma;
}

/// Omega_ij = sum_k v_k Gamma^i_kj assembled element by element.
inline Matrix dense_omega(const std::vector<Matrix>& gamma, const Vector& v) {
  const auto d = v.size();
  Matrix omega = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) omega(i, j) += v[k] * gamma[i](k, j);
  return omega;
}

/// Closed-form Christoffel matrices from analytic derivatives, built densely.
inline std::vector<Matrix> dense_christoffel(const Vector& grad, const Matrix& hess, double alpha) {
  const double l = 1.0 + alpha * alpha * grad.squaredNorm();
  std::vector<Matrix> out;
  for (Eigen::Index k = 0; k < grad.size(); ++k) out.push_back(alpha * alpha / l * grad[k] * hess);
  return out;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double lo = 0.2, double hi = 3.0) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = n01(rng);
  const Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector ev(d);
  for (Eigen::Index i = 0; i < d; ++i) ev[i] = u(rng);
  Matrix s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * n01(rng);
  return v;
}

inline ClassificationDataset synthetic_logistic_data(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector beta(d);
  for (Eigen::Index j = 0; j < d; ++j) beta[j] = 0.8 * n01(rng);
  ClassificationDataset data;
  data.features.resize(n, d);
  data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.features(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < d; ++j) data.features(i, j) = n01(rng);
    const double p = 1.0 / (1.0 + std::exp(-data.features.row(i).dot(beta)));
    data.labels[i] = u01(rng) < p ? 1.0 : 0.0;
  }
  return data;
}

/// A random target of dimension d with a random in-support point, cycling
/// through target families.
struct RandomInstance {
  TargetPtr target;
  Vector x;
};

inline RandomInstance random_instance(std::mt19937_64& rng, Eigen::Index d, int family) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  switch (family % 3) {
    case 0: {
      const Vector mean = random_vector(rng, d);
      return {gaussian_target(mean, random_spd(rng, d)), mean + random_vector(rng, d, 1.5)};
    }
    case 1: {
      if (d == 1) return {gaussian_target(Vector::Zero(1), Matrix::Constant(1, 1, 2.0)), random_vector(rng, 1, 2.0)};
      Vector x = random_vector(rng, d, 0.7);
      x[d - 1] = 2.0 * u(rng);
      return {funnel_target(static_cast<std::size_t>(d - 1), 0.0, 3.0), x};
    }
    default: {
      auto data = synthetic_logistic_data(static_cast<std::uint64_t>(rng()), 40, d);
      return {logistic_regression_target(std::move(data), 10.0), random_vector(rng, d, 0.5)};
    }
  }
}

/// The 2-D targets used for geometric checks (funnel with one x coordinate).
inline std::vector<TargetPtr> two_d_targets() {
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  return {
      banana_target(default_banana_observations(), 0.5, 0.5),
      ring_target(12.0, 0.12),
      squiggle_target(1.0, default_squiggle_covariance()),
      funnel_target(1, 0.0, 15.0),
      gaussian_target(Vector::Zero(2), cov),
  };
}

inline Vector random_point_for(const TargetDensity& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector x(2);
  if (t.name() == "ring") {
    const double angle = 3.14159265358979 * u(rng);
    const double r = 12.0 + 0.5 * u(rng);
    x << r * std::cos(angle), r * std::sin(angle);
  } else if (t.name() == "squiggle") {
    const double x1 = 3.0 * u(rng);
    x << x1, -std::sin(x1) + 0.05 * u(rng);
  } else if (t.name() == "funnel") {
    x << 0.5 * u(rng), 2.0 * u(rng);
  } else {
    x << u(rng), u(rng);
  }
  return x;
}

}  // namespace monge::testing
