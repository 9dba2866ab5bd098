#include "monge/targets.hpp"

#include "monge/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace monge {

double softplus(double a) {
  if (a > 0.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_dimension(const Vector& x, std::size_t dim, const char* who) {
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw std::invalid_argument(std::string(who) + ": expected dimension " + std::to_string(dim) +
                                ", got " + std::to_string(x.size()));
  }
}

// Cholesky factor with an SPD check; also returns log det.
Eigen::LLT<Matrix> checked_llt(const Matrix& cov, const char* who) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw NonPositiveDefinite(std::string(who) + ": covariance must be square and non-empty");
  }
  if (!cov.allFinite() || (cov - cov.transpose()).cwiseAbs().maxCoeff() >
                              1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw NonPositiveDefinite(std::string(who) + ": covariance must be finite and symmetric");
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NonPositiveDefinite(std::string(who) + ": covariance is not positive definite");
  }
  return llt;
}

double llt_log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

class GaussianTarget final : public TargetDensity {
 public:
  GaussianTarget(Vector mean, const Matrix& cov) : mean_(std::move(mean)) {
    if (mean_.size() != cov.rows()) {
      throw std::invalid_argument("gaussian: mean and covariance sizes differ");
    }
    const auto llt = checked_llt(cov, "gaussian");
    precision_ = llt.solve(Matrix::Identity(cov.rows(), cov.cols()));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
    log_norm_ = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + llt_log_det(llt));
  }

  std::size_t dimension() const override { return static_cast<std::size_t>(mean_.size()); }
  std::string name() const override { return "gaussian"; }

  double log_density(const Vector& x) const override {
    require_dimension(x, dimension(), "gaussian");
    const Vector d = x - mean_;
    return log_norm_ - 0.5 * d.dot(precision_ * d);
  }
  Vector gradient(const Vector& x) const override {
    require_dimension(x, dimension(), "gaussian");
    return -(precision_ * (x - mean_));
  }
  Matrix hessian(const Vector& x) const override {
    require_dimension(x, dimension(), "gaussian");
    return -precision_;
  }

 private:
  Vector mean_;
  Matrix precision_;
  double log_norm_ = 0.0;
};

class FunnelTarget final : public TargetDensity {
 public:
  FunnelTarget(std::size_t dim_x, double mu, double sigma2_a)
      : dim_x_(dim_x), mu_(mu), sigma2_a_(sigma2_a) {
    if (dim_x == 0) throw std::invalid_argument("funnel: dim_x must be >= 1");
    if (!(sigma2_a > 0.0) || !std::isfinite(sigma2_a)) {
      throw std::invalid_argument("funnel: sigma2_a must be > 0");
    }
    if (!std::isfinite(mu)) throw std::invalid_argument("funnel: mu must be finite");
  }

  std::size_t dimension() const override { return dim_x_ + 1; }
  std::string name() const override { return "funnel"; }

  double log_density(const Vector& x) const override { return evaluate_impl(x, false).log_density; }
  Vector gradient(const Vector& x) const override { return evaluate_impl(x, false).gradient; }
  Matrix hessian(const Vector& x) const override { return evaluate_impl(x, true).hessian; }
  Evaluation evaluate(const Vector& x) const override { return evaluate_impl(x, true); }

 private:
  Evaluation evaluate_impl(const Vector& z, bool with_hessian) const {
    require_dimension(z, dimension(), "funnel");
    const auto n = static_cast<Eigen::Index>(dim_x_);
    const double a = z[n];
    const auto xs = z.head(n);
    const double s = softplus(a);
    const double ds = sigmoid(a);
    const double d2s = ds * (1.0 - ds);
    const double q = xs.squaredNorm();
    const double dim = static_cast<double>(dim_x_);
    const double da = a - mu_;

    Evaluation e;
    e.log_density = -0.5 * dim * (kLog2Pi + std::log(s)) - q / (2.0 * s) -
                    0.5 * (kLog2Pi + std::log(sigma2_a_)) - da * da / (2.0 * sigma2_a_);

    // f(s) = -(D/2) log s - q / (2 s)
    const double f1 = -dim / (2.0 * s) + q / (2.0 * s * s);
    e.gradient.resize(n + 1);
    e.gradient.head(n) = -xs / s;
    e.gradient[n] = ds * f1 - da / sigma2_a_;

    if (with_hessian) {
      const double f2 = dim / (2.0 * s * s) - q / (s * s * s);
      e.hessian = Matrix::Zero(n + 1, n + 1);
      e.hessian.topLeftCorner(n, n).diagonal().setConstant(-1.0 / s);
      const Vector cross = xs * (ds / (s * s));
      e.hessian.col(n).head(n) = cross;
      e.hessian.row(n).head(n) = cross.transpose();
      e.hessian(n, n) = d2s * f1 + ds * ds * f2 - 1.0 / sigma2_a_;
    }
    return e;
  }

  std::size_t dim_x_;
  double mu_;
  double sigma2_a_;
};

class BananaTarget final : public TargetDensity {
 public:
  BananaTarget(Vector y, double sigma2_y, double sigma2)
      : y_(std::move(y)), sigma2_y_(sigma2_y), sigma2_(sigma2) {
    if (!(sigma2_y > 0.0) || !(sigma2 > 0.0)) {
      throw std::invalid_argument("banana: variances must be > 0");
    }
    if (y_.size() == 0 || !y_.allFinite()) {
      throw std::invalid_argument("banana: need at least one finite observation");
    }
    sum_y_ = y_.sum();
  }

  std::size_t dimension() const override { return 2; }
  std::string name() const override { return "banana"; }

  double log_density(const Vector& x) const override {
    require_dimension(x, 2, "banana");
    const double m = x[0] + x[1] * x[1];
    return -(y_.array() - m).square().sum() / (2.0 * sigma2_y_) - x.squaredNorm() / (2.0 * sigma2_);
  }

  Vector gradient(const Vector& x) const override {
    require_dimension(x, 2, "banana");
    const double resid = residual_sum(x);
    Vector g(2);
    g[0] = resid / sigma2_y_ - x[0] / sigma2_;
    g[1] = 2.0 * x[1] * resid / sigma2_y_ - x[1] / sigma2_;
    return g;
  }

  Matrix hessian(const Vector& x) const override {
    require_dimension(x, 2, "banana");
    const double n = static_cast<double>(y_.size());
    const double resid = residual_sum(x);
    Matrix h(2, 2);
    h(0, 0) = -n / sigma2_y_ - 1.0 / sigma2_;
    h(0, 1) = h(1, 0) = -2.0 * n * x[1] / sigma2_y_;
    h(1, 1) = 2.0 * resid / sigma2_y_ - 4.0 * n * x[1] * x[1] / sigma2_y_ - 1.0 / sigma2_;
    return h;
  }

 private:
  double residual_sum(const Vector& x) const {
    return sum_y_ - static_cast<double>(y_.size()) * (x[0] + x[1] * x[1]);
  }

  Vector y_;
  double sigma2_y_;
  double sigma2_;
  double sum_y_ = 0.0;
};

class RingTarget final : public TargetDensity {
 public:
  RingTarget(double mu, double sigma2) : mu_(mu), sigma2_(sigma2) {
    if (!(mu > 0.0) || !(sigma2 > 0.0)) throw std::invalid_argument("ring: mu and sigma2 must be > 0");
    log_norm_ = -0.5 * (kLog2Pi + std::log(sigma2)) - std::log(2.0 * std::numbers::pi);
  }

  std::size_t dimension() const override { return 2; }
  std::string name() const override { return "ring"; }

  double log_density(const Vector& x) const override {
    const double r = radius(x);
    const double d = r - mu_;
    return log_norm_ - d * d / (2.0 * sigma2_) - std::log(r);
  }

  Vector gradient(const Vector& x) const override {
    const double r = radius(x);
    return (radial_slope(r) / r) * x;
  }

  Matrix hessian(const Vector& x) const override {
    const double r = radius(x);
    const double g1 = radial_slope(r);
    const double g2 = -1.0 / sigma2_ + 1.0 / (r * r);
    const Vector u = x / r;
    const Matrix uu = u * u.transpose();
    return g2 * uu + (g1 / r) * (Matrix::Identity(2, 2) - uu);
  }

 private:
  double radius(const Vector& x) const {
    require_dimension(x, 2, "ring");
    const double r = std::hypot(x[0], x[1]);
    if (r < 1e-12) throw OriginSingularity("ring: density is singular at the origin");
    return r;
  }
  // d/dr of the radial log-density.
  double radial_slope(double r) const { return -(r - mu_) / sigma2_ - 1.0 / r; }

  double mu_;
  double sigma2_;
  double log_norm_ = 0.0;
};

class SquiggleTarget final : public TargetDensity {
 public:
  SquiggleTarget(double a, const Matrix& cov) : a_(a) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("squiggle: a must be >= 0");
    if (cov.rows() != 2 || cov.cols() != 2) throw NonPositiveDefinite("squiggle: covariance must be 2x2");
    const auto llt = checked_llt(cov, "squiggle");
    precision_ = llt.solve(Matrix::Identity(2, 2));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
    log_norm_ = -0.5 * (2.0 * kLog2Pi + llt_log_det(llt));
  }

  std::size_t dimension() const override { return 2; }
  std::string name() const override { return "squiggle"; }

  double log_density(const Vector& x) const override {
    const Vector y = warp(x);
    return log_norm_ - 0.5 * y.dot(precision_ * y);
  }

  Vector gradient(const Vector& x) const override {
    const Vector py = precision_ * warp(x);
    Vector g(2);
    g[0] = -(py[0] + a_ * std::cos(a_ * x[0]) * py[1]);
    g[1] = -py[1];
    return g;
  }

  Matrix hessian(const Vector& x) const override {
    const Vector py = precision_ * warp(x);
    Matrix jac = Matrix::Identity(2, 2);
    jac(1, 0) = a_ * std::cos(a_ * x[0]);
    Matrix h = -(jac.transpose() * precision_ * jac);
    h(0, 0) += py[1] * a_ * a_ * std::sin(a_ * x[0]);
    return h;
  }

 private:
  Vector warp(const Vector& x) const {
    require_dimension(x, 2, "squiggle");
    Vector y(2);
    y[0] = x[0];
    y[1] = x[1] + std::sin(a_ * x[0]);
    return y;
  }

  double a_;
  Matrix precision_;
  double log_norm_ = 0.0;
};

class LogisticRegressionTarget final : public TargetDensity {
 public:
  LogisticRegressionTarget(ClassificationDataset data, double prior_var)
      : data_(std::move(data)), prior_var_(prior_var) {
    validate_dataset(data_);
    if (!(prior_var > 0.0) || !std::isfinite(prior_var)) {
      throw std::invalid_argument("logistic: prior_var must be > 0");
    }
  }

  std::size_t dimension() const override { return data_.num_features(); }
  std::string name() const override { return "logistic"; }

  double log_density(const Vector& theta) const override {
    require_dimension(theta, dimension(), "logistic");
    const Vector eta = data_.features * theta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += data_.labels[i] * eta[i] - softplus(eta[i]);
    return ll - theta.squaredNorm() / (2.0 * prior_var_);
  }

  Vector gradient(const Vector& theta) const override { return evaluate_impl(theta, false).gradient; }
  Matrix hessian(const Vector& theta) const override { return evaluate_impl(theta, true).hessian; }
  Evaluation evaluate(const Vector& theta) const override { return evaluate_impl(theta, true); }

 private:
  Evaluation evaluate_impl(const Vector& theta, bool with_hessian) const {
    require_dimension(theta, dimension(), "logistic");
    const Vector eta = data_.features * theta;
    Vector resid(eta.size());
    Vector weight(eta.size());
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = sigmoid(eta[i]);
      ll += data_.labels[i] * eta[i] - softplus(eta[i]);
      resid[i] = data_.labels[i] - p;
      weight[i] = p * (1.0 - p);
    }
    Evaluation e;
    e.log_density = ll - theta.squaredNorm() / (2.0 * prior_var_);
    e.gradient = data_.features.transpose() * resid - theta / prior_var_;
    if (with_hessian) {
      e.hessian = -(data_.features.transpose() * weight.asDiagonal() * data_.features);
      e.hessian.diagonal().array() -= 1.0 / prior_var_;
    }
    return e;
  }

  ClassificationDataset data_;
  double prior_var_;
};

}  // namespace

void validate_dataset(const ClassificationDataset& data) {
  if (data.labels.size() == 0) throw ConfigError("dataset: need at least one observation");
  if (data.features.rows() != data.labels.size()) {
    throw ConfigError("dataset: feature rows and label count differ");
  }
  if (data.features.cols() == 0) throw ConfigError("dataset: need at least one feature column");
  if (!data.features.allFinite()) throw ConfigError("dataset: non-finite feature value");
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] != 0.0 && data.labels[i] != 1.0) {
      throw ConfigError("dataset: label on row " + std::to_string(i + 1) + " is not 0 or 1");
    }
  }
}

ClassificationDataset parse_dataset(const std::string& text, const DatasetFormat& format) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = format.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::string field;
    std::istringstream fields(line);
    const auto split = [&](std::string& out) {
      if (format.delimiter == ' ') return static_cast<bool>(fields >> out);
      return static_cast<bool>(std::getline(fields, out, format.delimiter));
    };
    while (split(field)) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ConfigError("dataset: line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
      }
    }
    if (row.size() < 2) {
      throw ConfigError("dataset: line " + std::to_string(line_no) + ": need features and a label");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("dataset: line " + std::to_string(line_no) + ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("dataset: no observations");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto raw = static_cast<Eigen::Index>(rows.front().size()) - 1;
  const Eigen::Index offset = format.add_intercept ? 1 : 0;
  ClassificationDataset data;
  data.features.resize(n, raw + offset);
  data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (format.add_intercept) data.features(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < raw; ++j) data.features(i, j + offset) = rows[i][j];
    data.labels[i] = rows[i][raw];
  }
  validate_dataset(data);
  return data;
}

ClassificationDataset load_dataset(const std::filesystem::path& path, const DatasetFormat& format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format);
}

TargetPtr gaussian_target(const Vector& mean, const Matrix& covariance) {
  return std::make_shared<GaussianTarget>(mean, covariance);
}

TargetPtr funnel_target(std::size_t dim_x, double mu, double sigma2_a) {
  return std::make_shared<FunnelTarget>(dim_x, mu, sigma2_a);
}

TargetPtr banana_target(const Vector& y_data, double sigma2_y, double sigma2) {
  return std::make_shared<BananaTarget>(y_data, sigma2_y, sigma2);
}

Vector default_banana_observations() {
  Vector y(10);
  y << -0.010272927390107434, 1.1680622095752842, 0.766063034193354, 0.6776891423535023,
      -0.44337193589282564, 0.8948274896054839, 0.5025590406289657, 1.7611961898026498,
      -0.22516126870403919, 0.7754846147063852;
  return y;
}

TargetPtr ring_target(double mu, double sigma2) { return std::make_shared<RingTarget>(mu, sigma2); }

TargetPtr squiggle_target(double a, const Matrix& covariance) {
  return std::make_shared<SquiggleTarget>(a, covariance);
}

Matrix default_squiggle_covariance() {
  Matrix cov(2, 2);
  cov << 10.0, 0.01, 0.01, 0.001;
  return cov;
}

TargetPtr logistic_regression_target(ClassificationDataset data, double prior_var) {
  return std::make_shared<LogisticRegressionTarget>(std::move(data), prior_var);
}

std::pair<Vector, Matrix> finite_difference_derivatives(const TargetDensity& target, const Vector& x,
                                                        double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_derivatives: h must be > 0");
  const auto d = x.size();
  Vector grad(d);
  Matrix hess(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    Vector up = x;
    Vector down = x;
    up[i] += step;
    down[i] -= step;
    const double width = up[i] - down[i];
    grad[i] = (target.log_density(up) - target.log_density(down)) / width;
    hess.col(i) = (target.gradient(up) - target.gradient(down)) / width;
  }
  return {grad, 0.5 * (hess + hess.transpose())};
}

}  // namespace monge
