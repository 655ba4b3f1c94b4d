// pdmp_cli: batch runner for simulation and verification experiments.
//
//   pdmp_cli rank --model gene --n 2
//   pdmp_cli --config run.json
//   pdmp_cli drift --model gene --R 20 --param kappa2=2

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdmp/cli.hpp"

namespace {

nlohmann::ordered_json parse_value(const std::string& text) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-deterministic Markov process simulation and verification"};
  std::string command, config_path, model, outdir, run_id;
  std::vector<std::string> params, sets;
  long long seed = -1;
  int n = -1, workers = -1;
  double radius = -1.0;
  app.add_option("command", command, "simulate | estimate-chain | estimate-flow | stationarity | stability | drift | "
                                     "rank | r0v | list-models");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--model", model, "model id (see list-models)");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--n", n, "maximum jump count for rank certificates");
  app.add_option("--R", radius, "radius of the drift box B0");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--outdir", outdir, "output directory");
  app.add_option("--run-id", run_id, "run directory name");
  app.add_option("--param", params, "model parameter override, key=value");
  app.add_option("--set", sets, "config override, key=value (value parsed as JSON when possible)");
  CLI11_PARSE(app, argc, argv);

  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  try {
    if (!config_path.empty()) cfg = pdmp::cli::load_config_file(config_path);
  } catch (const pdmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pdmp::cli::kConfig;
  }
  if (!cfg.is_object()) {
    std::cerr << "config error: config must be a JSON object\n";
    return pdmp::cli::kConfig;
  }
  if (!command.empty()) cfg["command"] = command;
  if (!model.empty()) cfg["model"] = model;
  if (seed >= 0) cfg["seed"] = seed;
  if (n >= 0) cfg["n"] = n;
  if (radius > 0.0) cfg["R"] = radius;
  if (workers > 0) cfg["workers"] = workers;
  if (!outdir.empty()) cfg["outdir"] = outdir;
  if (!run_id.empty()) cfg["run_id"] = run_id;
  auto split = [](const std::string& kv, std::string& key, std::string& value) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) return false;
    key = kv.substr(0, eq);
    value = kv.substr(eq + 1);
    return true;
  };
  for (const auto& kv : sets) {
    std::string key, value;
    if (!split(kv, key, value)) {
      std::cerr << "config error: --set expects key=value, got '" << kv << "'\n";
      return pdmp::cli::kConfig;
    }
    cfg[key] = parse_value(value);
  }
  for (const auto& kv : params) {
    std::string key, value;
    if (!split(kv, key, value)) {
      std::cerr << "config error: --param expects key=value, got '" << kv << "'\n";
      return pdmp::cli::kConfig;
    }
    if (!cfg.contains("params") || !cfg["params"].is_object()) cfg["params"] = nlohmann::ordered_json::object();
    cfg["params"][key] = parse_value(value);
  }
  return pdmp::cli::run(cfg);
}
