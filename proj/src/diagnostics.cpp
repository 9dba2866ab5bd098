#include "monge/diagnostics.hpp"

#include "monge/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

namespace monge {

namespace {

double series_mean(std::span<const double> s) {
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double centered_sum_squares(std::span<const double> s, double mean) {
  double acc = 0.0;
  for (double v : s) acc += (v - mean) * (v - mean);
  return acc;
}

}  // namespace

double autocorrelation(std::span<const double> series, std::size_t lag) {
  const std::size_t n = series.size();
  if (n < 2 || lag > n - 2) throw std::invalid_argument("autocorrelation: need 0 <= lag <= N - 2");
  const double mean = series_mean(series);
  const double gamma0 = centered_sum_squares(series, mean) / static_cast<double>(n);
  if (!(gamma0 > 0.0)) throw ZeroVariance("autocorrelation: series is constant");
  double acc = 0.0;
  for (std::size_t r = 0; r + lag < n; ++r) acc += (series[r] - mean) * (series[r + lag] - mean);
  return acc / static_cast<double>(n - lag) / gamma0;
}

std::vector<double> autocorrelations(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("autocorrelations: need N >= 2");
  const double mean = series_mean(series);
  const double gamma0 = centered_sum_squares(series, mean) / static_cast<double>(n);
  if (!(gamma0 > 0.0)) throw ZeroVariance("autocorrelations: series is constant");

  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  std::vector<double> buf(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) buf[i] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, buf);
  for (auto& c : freq) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> lagged;
  fft.inv(lagged, freq);

  std::vector<double> rho(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    rho[t] = lagged[t] / static_cast<double>(n - t) / gamma0;
  }
  rho[0] = 1.0;
  return rho;
}

EssPolicy parse_ess_policy(const std::string& name) {
  if (name == "first-negative") return EssPolicy::FirstNegative;
  if (name == "all-lags") return EssPolicy::AllLags;
  throw ConfigError("unknown ESS policy '" + name + "' (expected first-negative or all-lags)");
}

const char* to_string(EssPolicy policy) {
  return policy == EssPolicy::AllLags ? "all-lags" : "first-negative";
}

double effective_sample_size(std::span<const double> series, EssPolicy policy) {
  const std::size_t n = series.size();
  if (n < 4) throw std::invalid_argument("effective_sample_size: need N >= 4");
  const std::vector<double> rho = autocorrelations(series);
  double sum = 0.0;
  for (std::size_t t = 1; t < rho.size(); ++t) {
    if (policy == EssPolicy::FirstNegative && rho[t] < 0.0) break;
    sum += rho[t];
  }
  const double big_n = static_cast<double>(n);
  const double denom = 1.0 + 2.0 * sum;
  if (!(denom > 0.0)) return big_n;
  return std::min(big_n, big_n / denom);
}

double discrete_kl(std::span<const double> p, std::span<const double> counts) {
  if (p.size() != counts.size() || p.empty()) throw std::invalid_argument("discrete_kl: size mismatch");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double norm = total + 0.5 * static_cast<double>(counts.size());
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    const double q = (counts[k] + 0.5) / norm;
    kl += p[k] * std::log(p[k] / q);
  }
  return kl;
}

double histogram_kl(std::span<const double> samples, const std::function<double(double)>& true_log_pdf,
                    int n_bins, Interval range) {
  if (n_bins < 2) throw std::invalid_argument("histogram_kl: need at least 2 bins");
  if (!(range.hi > range.lo)) throw std::invalid_argument("histogram_kl: range must have positive length");
  const double width = (range.hi - range.lo) / n_bins;
  const auto bins = static_cast<std::size_t>(n_bins);

  std::vector<double> counts(bins, 0.0);
  std::size_t inside = 0;
  for (double s : samples) {
    if (!(s >= range.lo && s <= range.hi)) continue;
    auto k = static_cast<std::size_t>((s - range.lo) / width);
    counts[std::min(k, bins - 1)] += 1.0;
    ++inside;
  }
  if (inside == 0) throw EmptyRange("histogram_kl: no sample falls inside the range");

  std::vector<double> p(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double mid = range.lo + (static_cast<double>(k) + 0.5) * width;
    p[k] = std::exp(true_log_pdf(mid)) * width;
  }
  const double mass = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(mass > 0.0)) throw std::invalid_argument("histogram_kl: true density has no mass in range");
  for (double& v : p) v /= mass;
  return discrete_kl(p, counts);
}

ChainSummary summarize(const Chain& chain, EssPolicy policy) {
  if (chain.size() == 0) throw std::invalid_argument("summarize: empty chain");
  ChainSummary out;
  out.n_samples = chain.size();
  const auto n = static_cast<double>(chain.size());
  std::vector<double> column(static_cast<std::size_t>(chain.size()));
  std::vector<double> ess_values;
  for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
    Eigen::Map<Vector>(column.data(), chain.samples.rows()) = chain.samples.col(j);
    DimensionSummary d;
    d.mean = series_mean(column);
    d.variance = chain.size() > 1 ? centered_sum_squares(column, d.mean) / (n - 1.0) : 0.0;
    if (chain.size() >= 4) {
      try {
        d.ess = effective_sample_size(column, policy);
        d.mcse = std::sqrt(d.variance / *d.ess);
        ess_values.push_back(*d.ess);
      } catch (const ZeroVariance&) {
      }
    }
    out.dims.push_back(d);
  }
  if (!ess_values.empty()) {
    std::sort(ess_values.begin(), ess_values.end());
    const std::size_t m = ess_values.size();
    out.ess_min = ess_values.front();
    out.ess_mean = std::accumulate(ess_values.begin(), ess_values.end(), 0.0) / static_cast<double>(m);
    out.ess_median = m % 2 == 1 ? ess_values[m / 2] : 0.5 * (ess_values[m / 2 - 1] + ess_values[m / 2]);
  }
  const auto accepted = std::count(chain.accepted.begin(), chain.accepted.end(), true);
  out.acceptance_rate = chain.accepted.empty() ? 0.0 : static_cast<double>(accepted) / chain.accepted.size();
  if (!chain.accept_prob.empty()) {
    out.mean_accept_prob = std::accumulate(chain.accept_prob.begin(), chain.accept_prob.end(), 0.0) /
                           static_cast<double>(chain.accept_prob.size());
  }
  out.divergence_count = chain.divergence_count;
  out.divergence_warning = static_cast<double>(chain.divergence_count) > 0.01 * n;
  out.wall_seconds = chain.wall_seconds;
  return out;
}

}  // namespace monge
