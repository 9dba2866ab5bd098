#pragma once

#include "monge/samplers.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace monge {

/// Normalized autocorrelation rho_t = gamma_t / gamma_0 with
/// gamma_t = 1/(N - t) * sum_r (X_r - mean)(X_{r+t} - mean) and gamma_0 the
/// N-normalized variance. Requires 0 <= lag <= N - 2. Throws ZeroVariance.
double autocorrelation(std::span<const double> series, std::size_t lag);

/// rho_0 .. rho_{N-2} in one FFT pass. Throws ZeroVariance.
std::vector<double> autocorrelations(std::span<const double> series);

enum class EssPolicy {
  /// Sum rho_t up to (not including) the first negative lag.
  FirstNegative,
  /// Sum every lag 1 .. N-2.
  AllLags,
};

EssPolicy parse_ess_policy(const std::string& name);
const char* to_string(EssPolicy policy);

/// N / (1 + 2 sum rho_t), clamped to (0, N]. Requires N >= 4.
double effective_sample_size(std::span<const double> series, EssPolicy policy = EssPolicy::FirstNegative);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// sum_k P_k log(P_k / Q_k) for bin probabilities P and raw counts, with
/// Q_k = (count_k + 0.5) / (n + 0.5 * bins) and n the total count.
double discrete_kl(std::span<const double> p, std::span<const double> counts);

/// Histogram KL divergence from a known density to the samples. P is the
/// midpoint-rule bin mass renormalized over the range; samples outside the
/// range are ignored. Throws EmptyRange.
double histogram_kl(std::span<const double> samples, const std::function<double(double)>& true_log_pdf,
                    int n_bins, Interval range);

struct DimensionSummary {
  double mean = 0.0;
  double variance = 0.0;
  /// Unset when the chain is constant in this coordinate.
  std::optional<double> ess;
  std::optional<double> mcse;
};

struct ChainSummary {
  std::vector<DimensionSummary> dims;
  std::optional<double> ess_min;
  std::optional<double> ess_mean;
  std::optional<double> ess_median;
  double acceptance_rate = 0.0;
  double mean_accept_prob = 0.0;
  long divergence_count = 0;
  bool divergence_warning = false;
  double wall_seconds = 0.0;
  long n_samples = 0;
};

ChainSummary summarize(const Chain& chain, EssPolicy policy = EssPolicy::FirstNegative);

}  // namespace monge
