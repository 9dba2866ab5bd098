// Command-line driver: sampling, geodesic tracing and metric-field export.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 runtime failure
// (divergent run, unreadable data, unwritable output, invalid start point).

#include "monge/errors.hpp"
#include "monge/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian Monte Carlo in the Monge metric"};
  app.set_version_flag("--version", monge::kVersion);

  std::string config_path;
  app.add_option("--config", config_path, "key = value settings file; flags override it");

  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  for (const auto& key : monge::setting_keys()) {
    const std::string name = std::string("--") + key.name;
    if (key.is_flag) {
      options[key.name] = app.add_flag(name, flags[key.name], key.help);
    } else {
      options[key.name] = app.add_option(name, values[key.name], key.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    monge::Settings from_flags;
    for (const auto& key : monge::setting_keys()) {
      if (options[key.name]->count() == 0) continue;
      from_flags[key.name] = key.is_flag ? (flags[key.name] ? "true" : "false") : values[key.name];
    }
    monge::Settings settings;
    if (!config_path.empty()) settings = monge::load_config_file(config_path);
    settings = monge::merge_settings(settings, from_flags);

    const monge::ExperimentSpec spec = monge::build_experiment(settings);
    const monge::ExperimentOutcome outcome = monge::run_experiment(spec);
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& a : outcome.artifacts) std::cout << a.string() << "\n";
    if (outcome.exit_code != 0) std::cerr << "error: run failed (all transitions divergent or trace diverged)\n";
    return outcome.exit_code;
  } catch (const monge::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const monge::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const monge::InitialPointInvalid& e) {
    std::cerr << "invalid start: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
