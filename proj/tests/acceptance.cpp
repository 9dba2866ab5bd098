// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include "monge/diagnostics.hpp"
#include "monge/errors.hpp"
#include "monge/integrator.hpp"
#include "monge/samplers.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace monge;
using namespace monge::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

MongeConfig with_alpha(double alpha) {
  MongeConfig c;
  c.alpha = alpha;
  return c;
}

IntegratorConfig steps(double eps, int l_f) {
  IntegratorConfig c;
  c.eps = eps;
  c.l_f = l_f;
  return c;
}

SamplerConfig sampler(double alpha, double eps, int l_f, long n, std::uint64_t seed) {
  SamplerConfig c;
  c.alpha = alpha;
  c.eps = eps;
  c.l_f = l_f;
  c.n_samples = n;
  c.seed = seed;
  return c;
}

double acceptance_rate(const Chain& c) {
  return static_cast<double>(std::count(c.accepted.begin(), c.accepted.end(), true)) /
         static_cast<double>(c.accepted.size());
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Metric identities against dense and finite-difference oracles.

Outcome metric_identity_suite() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> alpha_dist(0.1, 2.0);
  std::uniform_real_distribution<double> eps_dist(0.01, 0.3);
  double worst_linear = 0.0;
  double worst_fd = 0.0;
  int instances = 0;
  for (Eigen::Index d : {1, 2, 5, 20}) {
    for (int i = 0; i < 100; ++i, ++instances) {
      const auto inst = random_instance(rng, d, i);
      const auto& t = *inst.target;
      const auto pt = evaluate_point(t, inst.x);
      const auto cfg = with_alpha(alpha_dist(rng));
      const double eps = eps_dist(rng);
      const Vector v = random_vector(rng, d);
      const Vector w = random_vector(rng, d);
      const Vector grad = t.gradient(inst.x);
      const Matrix hess = 0.5 * (t.hessian(inst.x) + t.hessian(inst.x).transpose());
      const Matrix g = dense_metric(grad, cfg.alpha);
      const Matrix g_inv = g.inverse();
      const double l = pt.l_alpha(cfg.alpha);

      const auto linear = [&](double err) { worst_linear = std::max(worst_linear, err); };
      // Inverse, determinant and inverse square root; errors scaled by the spectral range.
      linear((metric_inverse_apply(pt, cfg, w) - g_inv * w).norm() / w.norm());
      linear(std::abs(metric_log_det(pt, cfg) - std::log(g.determinant())) / std::log(l + 1.0));
      Matrix a(d, d);
      for (Eigen::Index j = 0; j < d; ++j) a.col(j) = metric_inverse_sqrt_apply(pt, cfg, Vector::Unit(d, j));
      linear((a * a.transpose() - g_inv).cwiseAbs().maxCoeff());

      // Omega, shifted determinants and rank-one solve against elementwise assembly.
      const auto gamma = dense_christoffel(grad, hess, cfg.alpha);
      const Matrix omega = dense_omega(gamma, v);
      const auto f = omega_factors(pt, v, cfg);
      linear(rel_err(Matrix(f.scale * f.left * f.right.transpose()), omega));
      for (int sign : {+1, -1}) {
        const Matrix shifted = g + sign * 0.5 * eps * g * omega;
        linear(rel_err(shifted_log_det(pt, v, cfg, sign, eps), std::log(std::abs(shifted.determinant()))));
      }
      const Vector solve = (g + 0.5 * eps * g * omega).partialPivLu().solve(w);
      linear((rank_one_system_solve(pt, v, cfg, eps, w) - solve).norm() / std::max(1.0, solve.norm()));

      // Christoffel symbols against Levi-Civita finite differences of G.
      const auto fd = levi_civita_fd(t, inst.x, cfg.alpha);
      for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) {
        worst_fd = std::max(worst_fd, rel_err(christoffel(pt, cfg, k), fd[k]));
      }
    }
  }
  std::ostringstream os;
  os << instances << " instances, worst linear-algebra error " << fmt("%.2e", worst_linear)
     << " (tol 1e-9), worst finite-difference error " << fmt("%.2e", worst_fd) << " (tol 1e-5)";
  return {worst_linear <= 1e-9 && worst_fd <= 1e-5, os.str()};
}

// ---------------------------------------------------------------------------
// 2. alpha = 0 reduces to Euclidean HMC.

std::vector<std::pair<TargetPtr, Vector>> six_targets() {
  Vector gx(2), fx(2), bx(2), rx(2), sx(2);
  gx << 0.5, -0.3;
  fx << 0.2, 0.5;
  bx << 0.3, 0.7;
  rx << 12.0, 0.0;
  sx << 0.5, -0.4;
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  return {
      {gaussian_target(Vector::Zero(2), cov), gx},
      {funnel_target(1, 0.0, 15.0), fx},
      {banana_target(default_banana_observations(), 0.5, 0.5), bx},
      {ring_target(12.0, 0.12), rx},
      {squiggle_target(1.0, default_squiggle_covariance()), sx},
      {logistic_regression_target(synthetic_logistic_data(5, 100, 4), 100.0), Vector::Zero(4)},
  };
}

Outcome euclidean_reduction() {
  double worst = 0.0;
  bool logdet_zero = true;
  std::mt19937_64 rng(1002);
  for (const auto& [t, x0] : six_targets()) {
    const double eps = t->name() == "squiggle" ? 0.005 : 0.02;
    for (int k = 0; k < 20; ++k) {
      const Vector v0 = random_vector(rng, x0.size());
      const auto cfg = steps(eps, 15);
      const auto lmc = integrate_trajectory(*t, {evaluate_point(*t, x0), v0}, with_alpha(0.0), cfg, true);
      const auto hmc = euclidean_leapfrog(*t, {x0, v0}, cfg, true);
      if (lmc.diverged != hmc.diverged || lmc.trace.size() != hmc.steps.size()) return {false, t->name() + ": trajectory shape differs"};
      for (std::size_t s = 0; s < hmc.steps.size(); ++s) {
        worst = std::max(worst, (lmc.trace[s] - hmc.steps[s].position).cwiseAbs().maxCoeff());
      }
      worst = std::max(worst, (lmc.final_state.velocity - hmc.final_state.momentum).cwiseAbs().maxCoeff());
      logdet_zero = logdet_zero && lmc.log_det_jacobian == 0.0;
    }
    const auto scfg = sampler(0.0, eps, 10, 2000, 77);
    const Chain a = lmc_monge_sample(*t, scfg, x0);
    const Chain b = hmc_euclidean_sample(*t, scfg, x0);
    worst = std::max(worst, (a.samples - b.samples).cwiseAbs().maxCoeff());
    for (double ld : a.log_det_jacobian) logdet_zero = logdet_zero && ld == 0.0;
    if (a.accepted != b.accepted) return {false, t->name() + ": acceptance flags differ"};
  }
  std::ostringstream os;
  os << "6 targets, max |LMC - HMC| = " << fmt("%.1e", worst) << " (tol 1e-12), logdet identically zero: "
     << (logdet_zero ? "yes" : "no");
  return {worst <= 1e-12 && logdet_zero, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Second-order energy error.

struct OrderCase {
  TargetPtr target;
  double eps;
  int l_f;
  std::function<Vector(std::mt19937_64&)> start;
};

Outcome integrator_order() {
  std::vector<OrderCase> cases;
  cases.push_back({gaussian_target(Vector::Zero(2), Matrix::Identity(2, 2)), 0.05, 20, [](std::mt19937_64& r) {
                     return random_vector(r, 2);
                   }});
  cases.push_back({banana_target(default_banana_observations(), 0.5, 0.5), 0.01, 20, [](std::mt19937_64& r) {
                     std::normal_distribution<double> n;
                     Vector x(2);
                     const double x2 = 0.75 + 0.1 * n(r);
                     x << 0.6 - x2 * x2 + 0.1 * n(r), x2;
                     return x;
                   }});
  cases.push_back({ring_target(12.0, 0.12), 0.01, 20, [](std::mt19937_64& r) {
                     std::uniform_real_distribution<double> u(-kPi, kPi);
                     std::normal_distribution<double> n;
                     const double radius = 12.0 + 0.3 * n(r);
                     const double angle = u(r);
                     Vector x(2);
                     x << radius * std::cos(angle), radius * std::sin(angle);
                     return x;
                   }});
  bool pass = true;
  std::ostringstream os;
  os << "contraction of median |dE - logdet| on halving eps (alpha 1):";
  for (const auto& c : cases) {
    std::mt19937_64 rng(1003);
    CounterRng vrng(1003);
    std::vector<double> coarse, fine;
    for (int k = 0; k < 100; ++k) {
      const auto pt = evaluate_point(*c.target, c.start(rng));
      const PhaseState s{pt, sample_velocity(pt, with_alpha(1.0), vrng)};
      const auto a = integrate_trajectory(*c.target, s, with_alpha(1.0), steps(c.eps, c.l_f));
      const auto b = integrate_trajectory(*c.target, s, with_alpha(1.0), steps(c.eps / 2.0, 2 * c.l_f));
      if (a.diverged || b.diverged) continue;
      coarse.push_back(std::abs(a.energy_end - a.energy_start - a.log_det_jacobian));
      fine.push_back(std::abs(b.energy_end - b.energy_start - b.log_det_jacobian));
    }
    const double ratio = median(coarse) / median(fine);
    pass = pass && coarse.size() == 100 && ratio >= 3.0 && ratio <= 5.0;
    os << " " << c.target->name() << " " << fmt("%.2f", ratio) << " (" << coarse.size() << " runs)";
  }
  os << "; band [3, 5]";
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Exact-distribution sampling.

Outcome exact_distribution() {
  const auto t1 = gaussian_target(Vector::Zero(1), Matrix::Identity(1, 1));
  const Chain c1 = lmc_monge_sample(*t1, sampler(1.0, 0.2, 10, 50000, 2024), Vector::Zero(1));
  std::vector<double> xs(c1.samples.data(), c1.samples.data() + c1.samples.size());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  const double critical = 1.9495 / std::sqrt(n);

  const auto t5 = gaussian_target(Vector::Zero(5), Matrix::Identity(5, 5));
  const Chain c5 = lmc_monge_sample(*t5, sampler(1.0, 0.2, 10, 20000, 77), Vector::Constant(5, 0.5));
  const auto s = summarize(c5);
  double worst = 0.0;
  for (const auto& dim : s.dims) worst = std::max(worst, std::abs(dim.mean) / *dim.mcse);

  std::ostringstream os;
  os << "KS D = " << fmt("%.4f", d) << " vs critical " << fmt("%.4f", critical) << " at 0.001; D=5 worst |mean|/MCSE = "
     << fmt("%.2f", worst) << " (tol 4)";
  return {d <= critical && worst <= 4.0, os.str()};
}

// ---------------------------------------------------------------------------
// 5. Funnel marginal.

Outcome funnel_reproduction() {
  const auto t = funnel_target(1, 0.0, 15.0);
  Vector x0(2);
  x0 << 0.0, 0.0;
  const auto cfg = sampler(1.0, 0.2, 9, 60000, 1);
  const Chain lmc = lmc_monge_sample(*t, cfg, x0);
  auto hcfg = cfg;
  hcfg.alpha = 0.0;
  const Chain hmc = hmc_euclidean_sample(*t, hcfg, x0);

  const double sd = std::sqrt(15.0);
  auto log_pdf = [](double a) { return -0.5 * std::log(2.0 * kPi * 15.0) - a * a / 30.0; };
  auto kl_of = [&](const Chain& c) {
    std::vector<double> a(static_cast<std::size_t>(c.size()));
    for (Eigen::Index i = 0; i < c.samples.rows(); ++i) a[static_cast<std::size_t>(i)] = c.samples(i, 1);
    return histogram_kl(a, log_pdf, 40, {-4.0 * sd, 4.0 * sd});
  };
  const double kl_lmc = kl_of(lmc);
  const double kl_hmc = kl_of(hmc);
  std::ostringstream os;
  os << "KL(LMC) = " << fmt("%.4f", kl_lmc) << " (tol 0.02), KL(HMC) = " << fmt("%.4f", kl_hmc)
     << ", ratio " << fmt("%.1f", kl_hmc / kl_lmc) << " (need >= 3); acceptance LMC " << fmt("%.2f", acceptance_rate(lmc))
     << ", HMC " << fmt("%.2f", acceptance_rate(hmc));
  return {kl_lmc < 0.02 && kl_hmc >= 3.0 * kl_lmc, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Logistic regression: LMC against a longer HMC reference.

Outcome logistic_agreement() {
  const auto t = logistic_regression_target(synthetic_logistic_data(20210413, 200, 5), 100.0);
  const Vector x0 = Vector::Zero(5);
  auto lcfg = sampler(0.01, 0.15, 10, 5000, 11);
  lcfg.warmup = 500;
  auto hcfg = sampler(0.0, 0.15, 10, 20000, 12);
  hcfg.warmup = 500;
  const Chain lmc = lmc_monge_sample(*t, lcfg, x0);
  const Chain hmc = hmc_euclidean_sample(*t, hcfg, x0);
  const auto sl = summarize(lmc);
  const auto sh = summarize(hmc);
  double worst = 0.0;
  for (std::size_t j = 0; j < sl.dims.size(); ++j) {
    const double se = std::hypot(*sl.dims[j].mcse, *sh.dims[j].mcse);
    worst = std::max(worst, std::abs(sl.dims[j].mean - sh.dims[j].mean) / se);
  }
  const double al = acceptance_rate(lmc);
  const double ah = acceptance_rate(hmc);
  std::ostringstream os;
  os << "worst |mean diff| / combined MCSE = " << fmt("%.2f", worst) << " (tol 3); acceptance LMC "
     << fmt("%.3f", al) << ", HMC " << fmt("%.3f", ah) << " (band [0.6, 0.9]); eps " << lcfg.eps << ", L_F " << lcfg.l_f;
  const auto in_band = [](double a) { return a >= 0.6 && a <= 0.9; };
  return {worst <= 3.0 && in_band(al) && in_band(ah), os.str()};
}

// ---------------------------------------------------------------------------
// 7. Diagnostics oracles.

Outcome diagnostics_oracle() {
  std::mt19937_64 rng(1007);
  std::normal_distribution<double> normal;
  const std::size_t n = 1000000;
  std::vector<double> xs(n);
  double x = normal(rng) / std::sqrt(0.75);
  for (auto& out : xs) {
    x = 0.5 * x + normal(rng);
    out = x;
  }
  const double ess_ratio = effective_sample_size(xs) / (static_cast<double>(n) / 3.0);

  const double sd = std::sqrt(15.0);
  std::normal_distribution<double> wide(0.0, sd);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = wide(rng);
  const double kl =
      histogram_kl(draws, [](double a) { return -0.5 * std::log(2.0 * kPi * 15.0) - a * a / 30.0; }, 40,
                   {-4.0 * sd, 4.0 * sd});
  std::ostringstream os;
  os << "AR(1) ESS / (N/3) = " << fmt("%.4f", ess_ratio) << " (tol 5%); exact-draw KL = " << fmt("%.5f", kl)
     << " (tol 0.01)";
  return {std::abs(ess_ratio - 1.0) <= 0.05 && kl < 0.01, os.str()};
}

// ---------------------------------------------------------------------------
// 8. Geodesic energy conservation on the ring.

Outcome geodesic_energy() {
  const auto ring = ring_target(12.0, 0.12);
  Vector x0(2), v0(2);
  x0 << 12.0, 0.0;
  v0 << 0.0, 1.0;
  bool pass = true;
  std::ostringstream os;
  os << "relative drift |dE|/|E| (H = E + log L in brackets):";
  for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
    const auto tr = geodesic_trace(*ring, {evaluate_point(*ring, x0), v0}, with_alpha(alpha), steps(0.03, 200));
    const double rel = std::abs(tr.energy_drift) / std::abs(tr.energies.front());
    const double rel_h = std::abs(tr.hamiltonian_drift) / std::abs(tr.hamiltonians.front());
    pass = pass && !tr.diverged && rel <= 1e-3;
    os << " alpha " << alpha << ": " << fmt("%.1e", rel) << " [" << fmt("%.1e", rel_h) << "]";
  }
  os << "; tol 1e-3";
  return {pass, os.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1 metric identity suite", 30, metric_identity_suite},
      {"2 euclidean reduction", 60, euclidean_reduction},
      {"3 integrator order", 120, integrator_order},
      {"4 exact-distribution sampling", 120, exact_distribution},
      {"5 funnel reproduction", 300, funnel_reproduction},
      {"6 logistic cross-sampler agreement", 300, logistic_agreement},
      {"7 diagnostics oracle", 60, diagnostics_oracle},
      {"8 geodesic energy conservation", 30, geodesic_energy},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %s: %s; %.1f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.limit_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
