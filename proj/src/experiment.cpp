#include "monge/experiment.hpp"

#include "monge/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace monge {

namespace {

// Target-specific keys and their defaults ("" = no default, required or optional).
struct TargetKey {
  const char* key;
  const char* fallback;
};

std::vector<TargetKey> target_keys(const std::string& target) {
  if (target == "gaussian") return {{"dim", "2"}, {"mu", "0"}, {"sigma2", "1"}};
  if (target == "funnel") return {{"dim", "1"}, {"mu", "0"}, {"sigma2-a", "15"}};
  if (target == "banana") return {{"sigma2-y", "0.5"}, {"sigma2", "0.5"}};
  if (target == "ring") return {{"mu", "12"}, {"sigma2", "0.12"}};
  if (target == "squiggle") return {{"a", "1"}};
  if (target == "logistic") {
    return {{"data", ""}, {"prior-var", "100"}, {"header", "false"}, {"no-intercept", "false"}, {"delimiter", ","}};
  }
  throw ConfigError("unknown target '" + target + "' (expected gaussian, funnel, banana, ring, squiggle, logistic)");
}

const std::set<std::string>& target_param_names() {
  static const std::set<std::string> names = {"dim",  "mu",       "sigma2", "sigma2-a",     "sigma2-y",
                                              "a",    "data",     "prior-var", "header",    "no-intercept",
                                              "delimiter"};
  return names;
}

// Keys that only make sense in some modes.
const std::map<std::string, std::set<RunMode>>& mode_restricted_keys() {
  static const std::map<std::string, std::set<RunMode>> keys = {
      {"sampler", {RunMode::Sample}},
      {"n", {RunMode::Sample}},
      {"warmup", {RunMode::Sample}},
      {"seed", {RunMode::Sample}},
      {"chains", {RunMode::Sample}},
      {"ess-policy", {RunMode::Sample}},
      {"trace", {RunMode::Sample}},
      {"x0", {RunMode::Sample, RunMode::Geodesic}},
      {"eps", {RunMode::Sample, RunMode::Geodesic}},
      {"lf", {RunMode::Sample, RunMode::Geodesic}},
      {"divergence-threshold", {RunMode::Sample, RunMode::Geodesic}},
      {"v0", {RunMode::Geodesic}},
      {"grid", {RunMode::MetricField}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("--" + key + ": '" + text + "' is not a number");
  }
  return v;
}

long parse_integer(const std::string& key, const std::string& text) {
  long v = 0;
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("--" + key + ": '" + text + "' is not an integer");
  }
  return v;
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("--seed: '" + text + "' is not a non-negative 64-bit integer");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("--" + key + ": '" + text + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) out.push_back(parse_number(key, field));
  if (out.empty()) throw ConfigError("--" + key + ": empty list");
  return out;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += shortest(v[i]);
  }
  return s;
}

Vector to_vector(const std::vector<double>& xs) {
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

RunMode parse_mode(const std::string& s) {
  if (s == "sample") return RunMode::Sample;
  if (s == "geodesic") return RunMode::Geodesic;
  if (s == "metric-field") return RunMode::MetricField;
  throw ConfigError("--mode: '" + s + "' (expected sample, geodesic or metric-field)");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write output '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing output '" + path.string() + "'");
}

void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

std::string suffixed(const std::string& stem, const std::string& ext, int index, int count) {
  if (count == 1) return stem + ext;
  return stem + "_" + std::to_string(index) + ext;
}

void append_row(std::string& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_double(v);
    first = false;
  }
  out += '\n';
}

}  // namespace

const std::vector<SettingKey>& setting_keys() {
  static const std::vector<SettingKey> keys = {
      {"target", false, "target density: gaussian, funnel, banana, ring, squiggle, logistic"},
      {"sampler", false, "lmc-monge or hmc"},
      {"mode", false, "sample, geodesic or metric-field"},
      {"alpha", false, "Monge embedding scale (>= 0)"},
      {"eps", false, "step size (> 0)"},
      {"lf", false, "leapfrog steps per trajectory (>= 1)"},
      {"n", false, "post-warmup samples per chain"},
      {"warmup", false, "discarded initial transitions"},
      {"seed", false, "RNG seed; chain i uses seed + i"},
      {"dim", false, "dimension (gaussian) or number of x coordinates (funnel)"},
      {"data", false, "logistic regression data file"},
      {"out", false, "output directory"},
      {"chains", false, "number of concurrent chains"},
      {"ess-policy", false, "first-negative or all-lags"},
      {"trace", true, "also write per-transition diagnostics"},
      {"x0", false, "initial position, comma separated"},
      {"v0", false, "initial velocity for geodesic mode, comma separated"},
      {"mu", false, "gaussian mean / funnel location / ring radius"},
      {"sigma2", false, "gaussian variance / banana prior variance / ring width"},
      {"sigma2-a", false, "funnel variance of a"},
      {"sigma2-y", false, "banana observation variance"},
      {"a", false, "squiggle frequency"},
      {"prior-var", false, "logistic prior variance"},
      {"header", true, "data file has a header row"},
      {"no-intercept", true, "do not prepend an intercept column"},
      {"delimiter", false, "data field delimiter (single character, 'space' for whitespace)"},
      {"grid", false, "metric-field grid: xlo,xhi,nx,ylo,yhi,ny"},
      {"divergence-threshold", false, "energy error marking a divergent trajectory"},
  };
  return keys;
}

Settings parse_config_text(const std::string& text, const std::string& origin) {
  std::set<std::string> known;
  for (const auto& k : setting_keys()) known.insert(k.name);
  Settings out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    if (!known.contains(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (out.contains(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

Settings load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

Settings merge_settings(const Settings& base, const Settings& overrides) {
  Settings out = base;
  for (const auto& [k, v] : overrides) out[k] = v;
  return out;
}

std::string settings_to_config_text(const Settings& settings) {
  std::string out;
  for (const auto& [k, v] : settings) out += k + " = " + v + "\n";
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

ExperimentSpec build_experiment(const Settings& raw) {
  std::set<std::string> known;
  for (const auto& k : setting_keys()) known.insert(k.name);
  for (const auto& [k, v] : raw) {
    if (!known.contains(k)) throw ConfigError("unknown setting '" + k + "'");
  }
  const auto get = [&](const std::string& key, const std::string& fallback) {
    const auto it = raw.find(key);
    return it == raw.end() ? fallback : it->second;
  };

  ExperimentSpec spec;
  Settings& eff = spec.effective;
  spec.target = get("target", "gaussian");
  spec.mode = parse_mode(get("mode", "sample"));
  eff["target"] = spec.target;
  eff["mode"] = get("mode", "sample");

  // Reject keys the chosen target or mode does not use.
  const auto tkeys = target_keys(spec.target);
  for (const auto& [k, v] : raw) {
    if (target_param_names().contains(k) &&
        std::none_of(tkeys.begin(), tkeys.end(), [&](const TargetKey& t) { return k == t.key; })) {
      throw ConfigError("--" + k + " is not a parameter of target '" + spec.target + "'");
    }
    const auto restricted = mode_restricted_keys().find(k);
    if (restricted != mode_restricted_keys().end() && !restricted->second.contains(spec.mode)) {
      throw ConfigError("--" + k + " is not used in --mode " + eff["mode"]);
    }
  }

  // Target.
  std::map<std::string, std::string> tp;
  for (const auto& t : tkeys) {
    const auto v = get(t.key, t.fallback);
    if (!v.empty()) tp[t.key] = v;
  }
  try {
    if (spec.target == "gaussian") {
      const long dim = parse_integer("dim", tp["dim"]);
      const double sigma2 = parse_number("sigma2", tp["sigma2"]);
      if (dim < 1) throw ConfigError("--dim must be >= 1");
      if (!(sigma2 > 0.0)) throw ConfigError("--sigma2 must be > 0");
      const double mu = parse_number("mu", tp["mu"]);
      spec.density = gaussian_target(Vector::Constant(dim, mu), sigma2 * Matrix::Identity(dim, dim));
      spec.x0 = Vector::Constant(dim, mu);
      eff["dim"] = std::to_string(dim);
      eff["mu"] = shortest(mu);
      eff["sigma2"] = shortest(sigma2);
    } else if (spec.target == "funnel") {
      const long dim = parse_integer("dim", tp["dim"]);
      if (dim < 1) throw ConfigError("--dim must be >= 1");
      const double mu = parse_number("mu", tp["mu"]);
      const double s2a = parse_number("sigma2-a", tp["sigma2-a"]);
      if (!(s2a > 0.0)) throw ConfigError("--sigma2-a must be > 0");
      spec.density = funnel_target(static_cast<std::size_t>(dim), mu, s2a);
      spec.x0 = Vector::Zero(dim + 1);
      spec.x0[dim] = mu;
      eff["dim"] = std::to_string(dim);
      eff["mu"] = shortest(mu);
      eff["sigma2-a"] = shortest(s2a);
    } else if (spec.target == "banana") {
      const double s2y = parse_number("sigma2-y", tp["sigma2-y"]);
      const double s2 = parse_number("sigma2", tp["sigma2"]);
      if (!(s2y > 0.0) || !(s2 > 0.0)) throw ConfigError("banana variances must be > 0");
      spec.density = banana_target(default_banana_observations(), s2y, s2);
      spec.x0 = Vector::Zero(2);
      eff["sigma2-y"] = shortest(s2y);
      eff["sigma2"] = shortest(s2);
    } else if (spec.target == "ring") {
      const double mu = parse_number("mu", tp["mu"]);
      const double s2 = parse_number("sigma2", tp["sigma2"]);
      if (!(mu > 0.0) || !(s2 > 0.0)) throw ConfigError("ring: --mu and --sigma2 must be > 0");
      spec.density = ring_target(mu, s2);
      spec.x0 = Vector::Zero(2);
      spec.x0[0] = mu;
      eff["mu"] = shortest(mu);
      eff["sigma2"] = shortest(s2);
    } else if (spec.target == "squiggle") {
      const double a = parse_number("a", tp["a"]);
      if (!(a >= 0.0)) throw ConfigError("--a must be >= 0");
      spec.density = squiggle_target(a, default_squiggle_covariance());
      spec.x0 = Vector::Zero(2);
      eff["a"] = shortest(a);
    } else if (spec.target == "logistic") {
      if (!tp.contains("data")) throw ConfigError("target 'logistic' requires --data <path>");
      DatasetFormat fmt;
      fmt.has_header = parse_bool("header", tp["header"]);
      fmt.add_intercept = !parse_bool("no-intercept", tp["no-intercept"]);
      const auto& delim = tp["delimiter"];
      if (delim == "space" || delim == " ") {
        fmt.delimiter = ' ';
      } else if (delim == "tab" || delim == "\t") {
        fmt.delimiter = '\t';
      } else if (delim.size() == 1) {
        fmt.delimiter = delim[0];
      } else {
        throw ConfigError("--delimiter must be a single character, 'space' or 'tab'");
      }
      const double prior_var = parse_number("prior-var", tp["prior-var"]);
      if (!(prior_var > 0.0)) throw ConfigError("--prior-var must be > 0");
      auto data = load_dataset(tp["data"], fmt);
      const auto dim = static_cast<Eigen::Index>(data.num_features());
      spec.density = logistic_regression_target(std::move(data), prior_var);
      spec.x0 = Vector::Zero(dim);
      eff["data"] = tp["data"];
      eff["prior-var"] = shortest(prior_var);
      eff["header"] = fmt.has_header ? "true" : "false";
      eff["no-intercept"] = fmt.add_intercept ? "false" : "true";
      eff["delimiter"] = delim;
    }
  } catch (const NonPositiveDefinite& err) {
    throw ConfigError(err.what());
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  const auto dim = static_cast<Eigen::Index>(spec.density->dimension());

  // Sampler / integrator.
  auto& sc = spec.sampler_cfg;
  sc.alpha = parse_number("alpha", get("alpha", "1"));
  eff["alpha"] = shortest(sc.alpha);
  if (!(sc.alpha >= 0.0) || !std::isfinite(sc.alpha)) throw ConfigError("--alpha must be >= 0");

  if (spec.mode != RunMode::MetricField) {
    sc.eps = parse_number("eps", get("eps", "0.1"));
    sc.l_f = static_cast<int>(parse_integer("lf", get("lf", "10")));
    sc.divergence_energy_threshold = parse_number("divergence-threshold", get("divergence-threshold", "1000"));
    if (!(sc.eps > 0.0) || !std::isfinite(sc.eps)) throw ConfigError("--eps must be > 0");
    if (sc.l_f < 1) throw ConfigError("--lf must be >= 1");
    if (!(sc.divergence_energy_threshold > 0.0)) throw ConfigError("--divergence-threshold must be > 0");
    eff["eps"] = shortest(sc.eps);
    eff["lf"] = std::to_string(sc.l_f);
    eff["divergence-threshold"] = shortest(sc.divergence_energy_threshold);

    if (raw.contains("x0")) spec.x0 = to_vector(parse_list("x0", raw.at("x0")));
    if (spec.x0.size() != dim) {
      throw ConfigError("--x0 has " + std::to_string(spec.x0.size()) + " entries, target dimension is " +
                        std::to_string(dim));
    }
    eff["x0"] = join(spec.x0);
  }

  if (spec.mode == RunMode::Sample) {
    spec.sampler = get("sampler", "lmc-monge");
    if (spec.sampler != "lmc-monge" && spec.sampler != "hmc") {
      throw ConfigError("--sampler: '" + spec.sampler + "' (expected lmc-monge or hmc)");
    }
    if (spec.sampler == "hmc" && raw.contains("alpha")) {
      throw ConfigError("--alpha has no effect with --sampler hmc");
    }
    sc.n_samples = parse_integer("n", get("n", "1000"));
    sc.warmup = parse_integer("warmup", get("warmup", "0"));
    sc.seed = parse_seed(get("seed", "1"));
    spec.chains = static_cast<int>(parse_integer("chains", get("chains", "1")));
    spec.ess_policy = parse_ess_policy(get("ess-policy", "first-negative"));
    spec.trace = parse_bool("trace", get("trace", "false"));
    if (sc.n_samples < 1) throw ConfigError("--n must be >= 1");
    if (sc.warmup < 0) throw ConfigError("--warmup must be >= 0");
    if (spec.chains < 1) throw ConfigError("--chains must be >= 1");
    eff["sampler"] = spec.sampler;
    if (spec.sampler == "hmc") eff.erase("alpha");
    eff["n"] = std::to_string(sc.n_samples);
    eff["warmup"] = std::to_string(sc.warmup);
    eff["seed"] = std::to_string(sc.seed);
    eff["chains"] = std::to_string(spec.chains);
    eff["ess-policy"] = to_string(spec.ess_policy);
    eff["trace"] = spec.trace ? "true" : "false";
  } else if (spec.mode == RunMode::Geodesic) {
    if (raw.contains("v0")) {
      spec.v0 = to_vector(parse_list("v0", raw.at("v0")));
    } else {
      spec.v0 = Vector::Zero(dim);
      spec.v0[dim - 1] = 1.0;
    }
    if (spec.v0.size() != dim) throw ConfigError("--v0 length does not match the target dimension");
    eff["v0"] = join(spec.v0);
  } else {
    if (dim != 2) throw ConfigError("--mode metric-field requires a 2-D target");
    if (raw.contains("grid")) {
      const auto g = parse_list("grid", raw.at("grid"));
      if (g.size() != 6) throw ConfigError("--grid expects xlo,xhi,nx,ylo,yhi,ny");
      spec.grid = {g[0], g[1], static_cast<int>(g[2]), g[3], g[4], static_cast<int>(g[5])};
      if (spec.grid.nx < 1 || spec.grid.ny < 1 || g[2] != std::floor(g[2]) || g[5] != std::floor(g[5])) {
        throw ConfigError("--grid point counts must be positive integers");
      }
    }
    const auto& gr = spec.grid;
    eff["grid"] = shortest(gr.x_lo) + "," + shortest(gr.x_hi) + "," + std::to_string(gr.nx) + "," +
                  shortest(gr.y_lo) + "," + shortest(gr.y_hi) + "," + std::to_string(gr.ny);
  }

  spec.out = get("out", ".");
  eff["out"] = spec.out.string();
  return spec;
}

void write_chain_csv(const Chain& chain, const std::filesystem::path& path) {
  std::string text;
  for (long j = 0; j < chain.dimension(); ++j) {
    if (j) text += ',';
    text += "x" + std::to_string(j + 1);
  }
  text += '\n';
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
      if (j) text += ',';
      text += format_double(chain.samples(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

nlohmann::json summary_to_json(const ChainSummary& s) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json dims = json::array();
  for (const auto& d : s.dims) {
    dims.push_back({{"mean", d.mean}, {"variance", d.variance}, {"ess", opt(d.ess)}, {"mcse", opt(d.mcse)}});
  }
  return {
      {"n_samples", s.n_samples},
      {"dimensions", dims},
      {"ess_min", opt(s.ess_min)},
      {"ess_mean", opt(s.ess_mean)},
      {"ess_median", opt(s.ess_median)},
      {"acceptance_rate", s.acceptance_rate},
      {"mean_accept_prob", s.mean_accept_prob},
      {"divergence_count", s.divergence_count},
      {"divergence_warning", s.divergence_warning},
      {"wall_seconds", s.wall_seconds},
  };
}

namespace {

ExperimentOutcome run_sampling(const ExperimentSpec& spec) {
  ExperimentOutcome outcome;
  const int k = spec.chains;
  std::vector<Chain> chains(static_cast<std::size_t>(k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));

  auto run_one = [&](int i) {
    try {
      SamplerConfig cfg = spec.sampler_cfg;
      cfg.seed = spec.sampler_cfg.seed + static_cast<std::uint64_t>(i);
      chains[static_cast<std::size_t>(i)] = spec.sampler == "hmc"
                                                ? hmc_euclidean_sample(*spec.density, cfg, spec.x0)
                                                : lmc_monge_sample(*spec.density, cfg, spec.x0);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (k == 1) {
    run_one(0);
  } else {
    std::vector<std::jthread> workers;
    for (int i = 0; i < k; ++i) workers.emplace_back(run_one, i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int i = 0; i < k; ++i) {
    const Chain& chain = chains[static_cast<std::size_t>(i)];
    const auto chain_path = spec.out / suffixed("chain", ".csv", i, k);
    write_chain_csv(chain, chain_path);
    outcome.artifacts.push_back(chain_path);

    const ChainSummary summary = summarize(chain, spec.ess_policy);
    nlohmann::json doc;
    doc["version"] = kVersion;
    doc["spec"] = spec.effective;
    doc["chain_index"] = i;
    doc["seed"] = spec.sampler_cfg.seed + static_cast<std::uint64_t>(i);
    doc["summary"] = summary_to_json(summary);
    doc["stationary_accepts"] = chain.stationary_accepts;
    doc["negative_jacobian_factors"] = chain.negative_jacobian_factors;
    doc["warmup_divergence_count"] = chain.warmup_divergence_count;
    if (summary.divergence_warning) {
      outcome.warnings.push_back("chain " + std::to_string(i) + ": " + std::to_string(chain.divergence_count) +
                                 " divergent transitions (more than 1%)");
    }
    doc["warnings"] = outcome.warnings;
    const auto summary_path = spec.out / suffixed("summary", ".json", i, k);
    write_text(summary_path, doc.dump(2) + "\n");
    outcome.artifacts.push_back(summary_path);

    if (spec.trace) {
      std::string text = "accepted,accept_prob,energy_start,energy_end,log_det_jacobian\n";
      for (std::size_t t = 0; t < chain.accepted.size(); ++t) {
        text += chain.accepted[t] ? "1," : "0,";
        text += format_double(chain.accept_prob[t]) + "," + format_double(chain.energies[t].first) + "," +
                format_double(chain.energies[t].second) + "," + format_double(chain.log_det_jacobian[t]) + "\n";
      }
      const auto path = spec.out / suffixed("transitions", ".csv", i, k);
      write_text(path, text);
      outcome.artifacts.push_back(path);
    }
    if (chain.divergence_count == chain.size()) outcome.exit_code = 2;
  }
  return outcome;
}

ExperimentOutcome run_geodesic(const ExperimentSpec& spec) {
  ExperimentOutcome outcome;
  const MongeConfig mcfg = spec.sampler_cfg.monge();
  const IntegratorConfig icfg = spec.sampler_cfg.integrator();
  DifferentiablePoint start;
  try {
    start = evaluate_point(*spec.density, spec.x0);
  } catch (const NonFiniteEvaluation& err) {
    throw InitialPointInvalid(std::string("initial point: ") + err.what());
  }
  const GeodesicTrace tr = geodesic_trace(*spec.density, {start, spec.v0}, mcfg, icfg);

  const auto d = spec.x0.size();
  std::string text = "step";
  for (Eigen::Index j = 0; j < d; ++j) text += ",x" + std::to_string(j + 1);
  for (Eigen::Index j = 0; j < d; ++j) text += ",v" + std::to_string(j + 1);
  text += ",energy,hamiltonian\n";
  for (std::size_t s = 0; s < tr.positions.size(); ++s) {
    text += std::to_string(s);
    for (Eigen::Index j = 0; j < d; ++j) text += "," + format_double(tr.positions[s][j]);
    for (Eigen::Index j = 0; j < d; ++j) text += "," + format_double(tr.velocities[s][j]);
    text += "," + (s < tr.energies.size() ? format_double(tr.energies[s]) : std::string("nan"));
    text += "," + (s < tr.hamiltonians.size() ? format_double(tr.hamiltonians[s]) : std::string("nan")) + "\n";
  }
  const auto trace_path = spec.out / "trace.csv";
  write_text(trace_path, text);
  outcome.artifacts.push_back(trace_path);

  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["spec"] = spec.effective;
  doc["steps"] = tr.positions.size() - 1;
  doc["energy_start"] = tr.energies.empty() ? 0.0 : tr.energies.front();
  doc["energy_drift"] = tr.energy_drift;
  doc["relative_energy_drift"] =
      tr.energies.empty() || tr.energies.front() == 0.0 ? 0.0 : std::abs(tr.energy_drift / tr.energies.front());
  doc["hamiltonian_drift"] = tr.hamiltonian_drift;
  doc["relative_hamiltonian_drift"] = tr.hamiltonians.empty() || tr.hamiltonians.front() == 0.0
                                          ? 0.0
                                          : std::abs(tr.hamiltonian_drift / tr.hamiltonians.front());
  doc["diverged"] = tr.diverged;
  doc["divergence_reason"] = to_string(tr.reason);
  const auto summary_path = spec.out / "summary.json";
  write_text(summary_path, doc.dump(2) + "\n");
  outcome.artifacts.push_back(summary_path);
  if (tr.diverged) outcome.exit_code = 2;
  return outcome;
}

}  // namespace

ExperimentOutcome run_metric_field(const ExperimentSpec& spec) {
  if (spec.density->dimension() != 2) throw ConfigError("metric-field mode requires a 2-D target");
  ensure_out_dir(spec.out);
  const MongeConfig mcfg = spec.sampler_cfg.monge();
  const auto& g = spec.grid;
  const auto axis = [](double lo, double hi, int n, int i) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };

  std::string text = "x1,x2,g11,g12,g22,l_alpha,lambda_min,lambda_max,u_min1,u_min2,u_max1,u_max2\n";
  long skipped = 0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      Vector x(2);
      x << axis(g.x_lo, g.x_hi, g.nx, ix), axis(g.y_lo, g.y_hi, g.ny, iy);
      DifferentiablePoint pt;
      try {
        pt = evaluate_point(*spec.density, x);
      } catch (const NonFiniteEvaluation&) {
        ++skipped;
        continue;
      }
      const Matrix gm = metric_tensor(pt, mcfg);
      const double l_alpha = pt.l_alpha(mcfg.alpha);
      // Rank-one eigenstructure: L_alpha along g, 1 orthogonal to it.
      Vector u_max(2);
      if (pt.grad_sq_norm() > 0.0) {
        u_max = pt.grad() / std::sqrt(pt.grad_sq_norm());
      } else {
        u_max << 1.0, 0.0;
      }
      Vector u_min(2);
      u_min << -u_max[1], u_max[0];
      append_row(text, {x[0], x[1], gm(0, 0), gm(0, 1), gm(1, 1), l_alpha, 1.0, l_alpha, u_min[0], u_min[1],
                        u_max[0], u_max[1]});
    }
  }
  ExperimentOutcome outcome;
  const auto path = spec.out / "metric_field.csv";
  write_text(path, text);
  outcome.artifacts.push_back(path);
  if (skipped > 0) outcome.warnings.push_back(std::to_string(skipped) + " grid points outside the support skipped");
  return outcome;
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  ensure_out_dir(spec.out);
  switch (spec.mode) {
    case RunMode::Sample: return run_sampling(spec);
    case RunMode::Geodesic: return run_geodesic(spec);
    case RunMode::MetricField: return run_metric_field(spec);
  }
  return {};
}

}  // namespace monge
