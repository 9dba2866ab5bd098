#pragma once

#include "monge/diagnostics.hpp"
#include "monge/samplers.hpp"
#include "monge/targets.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace monge {

inline constexpr const char* kVersion = "1.0.0";

/// Raw key/value settings. Keys are the long flag names without "--".
using Settings = std::map<std::string, std::string>;

struct SettingKey {
  const char* name;
  bool is_flag;  // boolean switch, value "true"/"false"
  const char* help;
};

/// Every key accepted on the command line and in config files.
const std::vector<SettingKey>& setting_keys();

/// Parses "key = value" lines; '#' starts a comment. Unknown keys,
/// duplicates and malformed lines raise ConfigError naming the line.
Settings parse_config_text(const std::string& text, const std::string& origin = "config");
Settings load_config_file(const std::filesystem::path& path);

/// Later layers win: merge_settings(file, flags).
Settings merge_settings(const Settings& base, const Settings& overrides);

/// Writes settings back in config-file syntax.
std::string settings_to_config_text(const Settings& settings);

enum class RunMode { Sample, Geodesic, MetricField };

struct GridSpec {
  double x_lo = -3.0, x_hi = 3.0;
  int nx = 25;
  double y_lo = -3.0, y_hi = 3.0;
  int ny = 25;
};

struct ExperimentSpec {
  std::string target = "gaussian";
  std::string sampler = "lmc-monge";
  RunMode mode = RunMode::Sample;
  SamplerConfig sampler_cfg;
  Vector x0;
  Vector v0;  // geodesic mode only
  std::filesystem::path out = ".";
  int chains = 1;
  EssPolicy ess_policy = EssPolicy::FirstNegative;
  bool trace = false;
  GridSpec grid;
  TargetPtr density;
  /// Every setting with target-specific defaults filled in; re-running from
  /// this map reproduces the experiment.
  Settings effective;
};

/// Validates and resolves settings into a runnable spec. Throws ConfigError
/// for bad values or combinations, IoError for an unreadable dataset.
ExperimentSpec build_experiment(const Settings& settings);

struct ExperimentOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> warnings;
};

/// Runs the configured mode and writes artifacts under spec.out.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

/// Writes metric_field.csv over spec.grid. Requires a 2-D target.
ExperimentOutcome run_metric_field(const ExperimentSpec& spec);

/// 17-significant-digit CSV of the chain with header x1..xD.
void write_chain_csv(const Chain& chain, const std::filesystem::path& path);
nlohmann::json summary_to_json(const ChainSummary& summary);

/// Decimal text with 17 significant digits (lossless for doubles).
std::string format_double(double v);

}  // namespace monge
