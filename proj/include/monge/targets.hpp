#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace monge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Log-density value, gradient and Hessian at one position.
struct Evaluation {
  double log_density = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// A twice-differentiable log-density ell(x) = log pi(x), up to a constant.
///
/// Implementations are immutable after construction and may be shared by
/// concurrently running chains.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;

  virtual double log_density(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;

  /// All three quantities at once. Overridden where sharing work pays off.
  virtual Evaluation evaluate(const Vector& x) const {
    return {log_density(x), gradient(x), hessian(x)};
  }
};

using TargetPtr = std::shared_ptr<const TargetDensity>;

/// Binary-labelled design matrix for logistic regression.
struct ClassificationDataset {
  Matrix features;  // N x D, intercept column included when requested
  Vector labels;    // N entries in {0, 1}

  std::size_t size() const { return static_cast<std::size_t>(labels.size()); }
  std::size_t num_features() const { return static_cast<std::size_t>(features.cols()); }
};

/// Validates label/feature invariants; throws ConfigError.
void validate_dataset(const ClassificationDataset& data);

struct DatasetFormat {
  char delimiter = ',';
  bool has_header = false;
  bool add_intercept = true;
};

/// Reads one observation per row with the 0/1 label in the last column.
/// Blank lines and lines starting with '#' are skipped.
ClassificationDataset load_dataset(const std::filesystem::path& path,
                                   const DatasetFormat& format = {});
ClassificationDataset parse_dataset(const std::string& text, const DatasetFormat& format = {});

/// N(mean, covariance). Throws NonPositiveDefinite.
TargetPtr gaussian_target(const Vector& mean, const Matrix& covariance);

/// Funnel over (x_1..x_dim_x, a): x_i ~ N(0, softplus(a)) with softplus(a)
/// taken as the variance, a ~ N(mu, sigma2_a).
TargetPtr funnel_target(std::size_t dim_x, double mu, double sigma2_a);

/// Banana posterior: y_i ~ N(x1 + x2^2, sigma2_y), x1, x2 ~ N(0, sigma2).
TargetPtr banana_target(const Vector& y_data, double sigma2_y, double sigma2);

/// Ten observations drawn once from the banana model at (x1, x2) = (0, 1),
/// sigma2_y = 0.5 (numpy default_rng(20210413)).
Vector default_banana_observations();

/// Ring: N(r | mu, sigma2) / (2 pi r), r = |(x, y)|. Throws OriginSingularity
/// when evaluated within 1e-12 of the origin.
TargetPtr ring_target(double mu, double sigma2);

/// Squiggle: (x1, x2 + sin(a x1)) ~ N(0, covariance).
TargetPtr squiggle_target(double a, const Matrix& covariance);

/// Covariance used for the squiggle experiments.
Matrix default_squiggle_covariance();

/// Bayesian logistic regression with prior N(0, prior_var I).
TargetPtr logistic_regression_target(ClassificationDataset data, double prior_var = 100.0);

/// Central finite differences: gradient from log_density, Hessian from the
/// target's gradient. Step for coordinate i is h * max(1, |x_i|).
std::pair<Vector, Matrix> finite_difference_derivatives(const TargetDensity& target,
                                                        const Vector& x, double h = 1e-5);

/// Numerically stable log(1 + exp(a)).
double softplus(double a);
/// Numerically stable 1 / (1 + exp(-a)).
double sigmoid(double a);

}  // namespace monge
