#include <CLI11.hpp>

#include <ctime>
#include <iostream>

#include "experiments.hpp"

namespace {

using namespace bosonlab;
using namespace bosonlab::cli;

constexpr const char* kVersion = "1.0.0";

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json failure_file(const std::string& experiment, const std::vector<Failure>& failures) {
  json list = json::array();
  for (const auto& f : failures) list.push_back(to_json(f));
  return json{{"experiment", experiment}, {"count", failures.size()}, {"failures", list}};
}

int validate_potential(const std::string& path, const fs::path& out) {
  try {
    const Potential p = load_potential(path);
    std::cout << "potential " << path << ": dim " << p.dim() << ", " << p.coefficients().size()
              << " coefficients, v(0) = " << num(p.value_at_origin()) << ", integral = " << num(p.integral()) << '\n';
    return 0;
  } catch (const PotentialError& e) {
    std::vector<Failure> fs;
    for (const auto& v : e.violations()) {
      json vals = json::object();
      if (v.kind != PotentialViolation::Kind::parse) vals["k"] = v.k.str();
      fs.push_back({std::string("potential_") + to_string(v.kind), v.message, -1, vals});
      std::cerr << "potential_" << to_string(v.kind) << ": " << v.message << '\n';
    }
    if (!out.empty()) {
      fs::create_directories(out);
      write_json(out / "failures.json", failure_file("validate-potential", fs));
    }
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for the bosonized fermion gas on a torus"};
  std::string experiment, config_path, out_dir, potential_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  std::uint64_t seed = 0;

  auto names = experiment_names();
  names.push_back("validate-potential");
  app.add_option("experiment", experiment, "Experiment to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--set", overrides, "Override a config key (key=value, nested keys with dots)");
  app.add_option("--potential", potential_path, "Potential file (validate-potential)")->check(CLI::ExistingFile);
  app.set_version_flag("--version", kVersion);
  CLI11_PARSE(app, argc, argv);

  fs::path out = out_dir;
  Settings settings;
  json cfg = json::object();
  fs::path base = ".";
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        cfg = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
      }
      base = fs::path(config_path).parent_path();
      if (base.empty()) base = ".";
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    if (experiment == "validate-potential") {
      if (potential_path.empty()) {
        if (!cfg.contains("potential")) throw ConfigError("validate-potential needs --potential or a config with a potential");
        fs::path p = cfg["potential"].get<std::string>();
        potential_path = (p.is_relative() ? base / p : p).string();
      }
      return validate_potential(potential_path, out);
    }
    if (config_path.empty()) throw ConfigError("--config is required");
    if (cfg.contains("experiment") && cfg["experiment"] != experiment) {
      throw ConfigError("config is for experiment '" + cfg["experiment"].get<std::string>() + "'");
    }
    settings = parse_settings(cfg, base);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!out.empty()) {
      fs::create_directories(out);
      write_json(out / "failures.json",
                 failure_file(experiment, {Failure{"config_valid", e.what(), -1, json::object()}}));
    }
    return 2;
  }
  if (*threads_opt) settings.threads = threads;
  if (*seed_opt) {
    settings.seed = seed;
    settings.eigen.seed = seed;
  }
  if (out.empty()) out = settings.out.empty() ? fs::path("out") / experiment : settings.out;
  fs::create_directories(out);

  json manifest;
  manifest["tool"] = "bosonlab";
  manifest["version"] = kVersion;
  manifest["experiment"] = experiment;
  manifest["config_file"] = config_path;
  manifest["config"] = cfg;
  manifest["threads"] = settings.threads;
  manifest["seed"] = settings.seed;
  manifest["started_utc"] = utc_now();

  RunResult result;
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    result = run_experiment(experiment, settings);
    result.warnings = settings_warnings(experiment, settings);
  } catch (const std::exception& e) {
    result.failures.push_back({"run_completed", e.what(), -1, json::object()});
    code = 2;
  }
  const double total = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_csvs(out, result, manifest);
  manifest["warnings"] = result.warnings;
  manifest["summary"] = result.summary;
  manifest["timings_ms"] = json{{"total", total}, {"rows", result.row_ms}};
  manifest["failure_count"] = result.failures.size();
  manifest["status"] = result.failures.empty() ? "ok" : "failed";
  write_json(out / "manifest.json", manifest);
  write_json(out / "failures.json", failure_file(experiment, result.failures));

  for (const auto& f : result.failures) {
    std::cerr << "FAILED " << f.invariant;
    if (f.row >= 0) std::cerr << " (row " << f.row << ")";
    std::cerr << ": " << f.detail << '\n';
  }
  std::cout << experiment << ": " << (result.failures.empty() ? "ok" : "failed") << ", outputs in " << out.string()
            << '\n';
  if (code) return code;
  return result.failures.empty() ? 0 : 1;
}
