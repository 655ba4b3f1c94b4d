#ifndef PDMP_CLI_HPP
#define PDMP_CLI_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmp/density.hpp"
#include "pdmp/drift.hpp"
#include "pdmp/io.hpp"
#include "pdmp/rankcheck.hpp"
#include "pdmp/registry.hpp"
#include "pdmp/simulate.hpp"

namespace pdmp::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kDomain = 3, kExplosion = 4 };

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"simulate", "estimate-chain", "estimate-flow", "stationarity", "stability",
                                          "drift",    "rank",           "r0v",           "list-models"};
  return c;
}

/// Every key a config may carry, with its default. Null defaults are
/// resolved from the model registry.
inline Json config_defaults() {
  return {{"command", nullptr},
          {"model", "gene"},
          {"params", Json::object()},
          {"seed", 42},
          {"workers", 1},
          {"outdir", "runs"},
          {"run_id", nullptr},
          {"ode_tol", 1e-8},
          {"method", "inversion"},
          {"horizon", 100.0},
          {"max_jumps", 1000000},
          {"paths", 10},
          {"steps", 100000},
          {"burn_in", -1},
          {"x0", nullptr},
          {"grid", nullptr},
          {"starts", nullptr},
          {"times", Json::array({5.0, 50.0})},
          {"samples", 100000},
          {"n", 2},
          {"budget", 64},
          {"tau_rank", 1e-8},
          {"rank_kind", "chain"},
          {"t", 10.0},
          {"R", 20.0},
          {"shells", 40},
          {"angles", 9},
          {"r_min", 0.05},
          {"r_max_factor", 4.0},
          {"occupation_steps", 10000},
          {"s_panels", 200},
          {"theta_panels", 200},
          {"quad_eps", 1e-6}};
}

namespace detail {

inline Json grid_to_json(const GridSpec& g) {
  Json lo = Json::array(), hi = Json::array(), bins = Json::array(), disc = Json::array();
  for (const auto& a : g.axes) {
    lo.push_back(a.lo);
    hi.push_back(a.hi);
    bins.push_back(a.bins);
    disc.push_back(a.discrete);
  }
  return {{"lo", lo}, {"hi", hi}, {"bins", bins}, {"discrete", disc}};
}

inline GridSpec grid_from_json(const Json& j) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "lo" && it.key() != "hi" && it.key() != "bins" && it.key() != "discrete")
      throw ConfigError("grid: unknown key '" + it.key() + "'");
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  const auto bins = j.at("bins").get<std::vector<int>>();
  std::vector<bool> disc(lo.size(), false);
  if (j.contains("discrete")) disc = j.at("discrete").get<std::vector<bool>>();
  if (hi.size() != lo.size() || bins.size() != lo.size() || disc.size() != lo.size())
    throw ConfigError("grid: lo, hi, bins, discrete must have equal lengths");
  GridSpec g;
  for (std::size_t i = 0; i < lo.size(); ++i)
    g.axes.push_back(disc[i] ? Axis::integers(static_cast<int>(lo[i]), static_cast<int>(hi[i]))
                             : Axis::continuous(lo[i], hi[i], bins[i]));
  g.validate();
  return g;
}

inline State state_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError("state has a bad length");
  State x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
  return x;
}

inline Json state_to_json(const State& x) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

}  // namespace detail

/// Defaults overlaid with `user`; unknown keys and malformed values raise
/// ConfigError. The result is fully resolved and reloads to the same run.
inline Json resolve_config(const Json& user) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  Json c = config_defaults();
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!c.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
    c[it.key()] = it.value();
  }
  try {
    if (c["command"].is_null()) throw ConfigError("config needs a command");
    const auto cmd = c["command"].get<std::string>();
    bool known = false;
    for (const auto& k : commands()) known = known || k == cmd;
    if (!known) throw ConfigError("unknown command '" + cmd + "'");
    const ModelEntry& entry = find_model(c["model"].get<std::string>());
    c["params"] = resolve_params(entry, c["params"]);
    if (c["run_id"].is_null())
      c["run_id"] = cmd + "-" + entry.id + "-s" + std::to_string(c["seed"].get<std::uint64_t>());
    if (c["x0"].is_null()) c["x0"] = detail::state_to_json(entry.default_start(c["params"]));
    if (c["grid"].is_null())
      c["grid"] = detail::grid_to_json(entry.default_grid(c["params"]));
    else
      c["grid"] = detail::grid_to_json(detail::grid_from_json(c["grid"]));
    if (c["starts"].is_null()) {
      Json s = Json::array();
      if (entry.id == "gene") {
        s.push_back({0.1, 0.1});
        s.push_back({5.0, 5.0});
      } else {
        s.push_back(c["x0"]);
        s.push_back(c["x0"]);
      }
      c["starts"] = s;
    }
    const auto method = c["method"].get<std::string>();
    if (method != "inversion" && method != "thinning") throw ConfigError("method must be inversion or thinning");
    const auto kind = c["rank_kind"].get<std::string>();
    if (kind != "chain" && kind != "continuous") throw ConfigError("rank_kind must be chain or continuous");
    // type checks for the remaining scalars
    (void)c["seed"].get<std::uint64_t>();
    (void)c["workers"].get<unsigned>();
    (void)c["outdir"].get<std::string>();
    for (const char* k : {"ode_tol", "horizon", "tau_rank", "t", "R", "r_min", "r_max_factor", "quad_eps"})
      if (!c[k].is_number()) throw ConfigError(std::string("'") + k + "' must be a number");
    for (const char* k : {"max_jumps", "paths", "steps", "burn_in", "samples", "n", "budget", "shells", "angles",
                          "occupation_steps", "s_panels", "theta_panels"})
      if (!c[k].is_number_integer()) throw ConfigError(std::string("'") + k + "' must be an integer");
    (void)c["times"].get<std::vector<double>>();
    (void)detail::state_from_json(c["x0"]);
    for (const auto& s : c["starts"]) (void)detail::state_from_json(s);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

namespace detail {

struct Run {
  Json config;
  PdmpModel model;
  std::filesystem::path dir;
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& text) {
    io::write_file(dir / name, text);
    files.push_back(name);
  }
  JumpTimeMethod method() const {
    return config["method"] == "thinning" ? JumpTimeMethod::Thinning : JumpTimeMethod::HazardInversion;
  }
  std::uint64_t seed() const { return config["seed"].get<std::uint64_t>(); }
  unsigned workers() const { return config["workers"].get<unsigned>(); }
  State x0() const {
    State x = state_from_json(config["x0"]);
    require_in_space(model, x, "config x0");
    return x;
  }
  GridSpec grid() const { return grid_from_json(config["grid"]); }
  SimulationConfig sim() const {
    SimulationConfig s;
    s.horizon = config["horizon"].get<double>();
    s.max_jumps = config["max_jumps"].get<long>();
    s.method = method();
    s.seed = seed();
    s.workers = workers();
    s.validate();
    return s;
  }
  ChainOptions chain() const {
    ChainOptions o;
    o.steps = config["steps"].get<long>();
    o.burn_in = config["burn_in"].get<long>();
    o.paths = config["paths"].get<std::size_t>();
    o.seed = seed();
    o.workers = workers();
    o.method = method();
    o.validate();
    return o;
  }
  QuadratureSpec quadrature() const {
    QuadratureSpec q;
    q.s_panels = config["s_panels"].get<int>();
    q.theta_panels = config["theta_panels"].get<int>();
    q.eps = config["quad_eps"].get<double>();
    return q;
  }
  std::size_t paths() const {
    const auto p = config["paths"].get<long>();
    if (p < 1) throw ConfigError("paths must be positive");
    return static_cast<std::size_t>(p);
  }
};

inline void write_density(Run& r, const DensityEstimate& e, Json meta) {
  r.write("density.csv", io::density_csv(e));
  for (int a = 0; a < e.grid.dimension(); ++a) r.write("marginal_" + std::to_string(a) + ".csv", io::marginal_csv(e, a));
  Json j = io::density_json(e);
  j["seed"] = r.seed();
  for (auto it = meta.begin(); it != meta.end(); ++it) j[it.key()] = it.value();
  r.write("density.json", io::dump(j));
}

inline void cmd_simulate(Run& r) {
  const auto paths = simulate_paths(r.model, r.x0(), r.sim(), r.paths());
  r.write("trajectories.csv", io::trajectories_csv(paths, r.model.dimension(),
                                                   r.model.jumps.kind == ThetaKind::Continuous
                                                       ? r.model.jumps.theta_dimension
                                                       : 1));
  long exploded = 0, capped = 0, jumps = 0;
  for (const auto& p : paths) {
    exploded += p.exploded;
    capped += p.cap_hit;
    jumps += static_cast<long>(p.jumps.size());
  }
  r.write("summary.json", io::dump({{"paths", paths.size()},
                                    {"exploded_suspected", exploded},
                                    {"cap_hit", capped},
                                    {"total_jumps", jumps}}));
}

inline void cmd_estimate_chain(Run& r) {
  const ChainOptions o = r.chain();
  write_density(r, estimate_chain_density(r.model, r.x0(), r.grid(), o),
                {{"estimator", "embedded-chain"}, {"N", o.steps}, {"paths", o.paths}});
}

inline void cmd_estimate_flow(Run& r) {
  FlowOptions o;
  o.paths = r.paths();
  o.seed = r.seed();
  o.workers = r.workers();
  o.max_jumps = r.config["max_jumps"].get<long>();
  o.method = r.method();
  const double horizon = r.config["horizon"].get<double>();
  write_density(r, estimate_flow_density(r.model, r.x0(), horizon, r.grid(), o),
                {{"estimator", "time-average"}, {"horizon", horizon}, {"paths", o.paths}});
}

inline void cmd_stationarity(Run& r) {
  const ChainOptions o = r.chain();
  const DensityEstimate e = estimate_chain_density(r.model, r.x0(), r.grid(), o);
  const long draws = r.config["samples"].get<long>();
  const double residual = stationarity_residual(r.model, e, draws, r.seed() + 1, r.workers());
  write_density(r, e, {{"estimator", "embedded-chain"}, {"N", o.steps}, {"paths", o.paths}});
  r.write("stationarity.json", io::dump({{"residual_tv", residual}, {"draws", draws}}));
}

inline void cmd_stability(Run& r) {
  std::vector<State> starts;
  for (const auto& s : r.config["starts"]) {
    starts.push_back(state_from_json(s));
    require_in_space(r.model, starts.back(), "config starts");
  }
  const auto curves =
      stability_probe(r.model, starts, r.config["times"].get<std::vector<double>>(), r.grid(), r.paths(), r.sim());
  r.write("stability.csv", io::stability_csv(curves));
  Json pairs = Json::array();
  for (std::size_t p = 0; p < curves.pairs.size(); ++p)
    pairs.push_back({{"i", curves.pairs[p].first}, {"j", curves.pairs[p].second}, {"l1", curves.l1[p]}});
  r.write("stability.json", io::dump({{"times", curves.times}, {"paths", r.paths()}, {"pairs", pairs}}));
}

inline void cmd_drift(Run& r) {
  const ModelEntry& entry = find_model(r.config["model"].get<std::string>());
  if (!entry.lyapunov) throw ConfigError("model '" + entry.id + "' ships no Lyapunov function");
  DriftSpec spec;
  entry.lyapunov(r.config["params"], spec);
  spec.quadrature = r.quadrature();
  spec.workers = r.workers();
  const double R = r.config["R"].get<double>();
  if (!(R > 0.0)) throw ConfigError("R must be positive");
  const double rmax = r.config["r_max_factor"].get<double>() * R;
  const int shells = r.config["shells"].get<int>();
  const double rmin = r.config["r_min"].get<double>();
  set_sup_norm_ball(spec, r.model.dimension(), R);
  if (r.model.dimension() == 2) {
    spec.points = radial_shell_grid(rmin, rmax, shells, r.config["angles"].get<int>());
  } else if (r.model.dimension() == 1) {
    spec.points.push_back(make_state({0.0}));
    const double ratio = std::pow(rmax / rmin, 1.0 / (shells - 1));
    double x = rmin;
    for (int s = 0; s < shells; ++s, x *= ratio) spec.points.push_back(make_state({x}));
  } else {
    throw ConfigError("drift grids are built for one- and two-dimensional models");
  }
  const DriftReport rep = verify_drift(r.model, spec);
  Json j = io::to_json(rep);
  if (rep.verdict) {
    const auto occ = occupation_check(r.model, spec, r.x0(), r.config["occupation_steps"].get<long>(), r.paths(),
                                      r.seed(), rep.occupation_bound);
    j["occupation"] = {{"fraction", occ.fraction}, {"bound", occ.bound}, {"steps", occ.steps}, {"passes", occ.passes}};
  }
  r.write("drift.json", io::dump(j));
  std::string csv = "";
  for (int i = 0; i < r.model.dimension(); ++i) csv += "x_" + std::to_string(i) + ",";
  csv += "D,in_B0\n";
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    for (int k = 0; k < r.model.dimension(); ++k) csv += io::num(rep.points[i][k]) + ",";
    csv += io::num(rep.drift[i]) + "," + (rep.inside[i] ? "1" : "0") + "\n";
  }
  r.write("drift_points.csv", csv);
}

inline void cmd_rank(Run& r) {
  CertificateSearch opt;
  opt.max_n = r.config["n"].get<int>();
  opt.budget = r.config["budget"].get<int>();
  opt.tau_rank = r.config["tau_rank"].get<double>();
  opt.mode = default_mode(r.model);
  opt.kind = r.config["rank_kind"] == "continuous" ? MatrixKind::Continuous : MatrixKind::Chain;
  opt.time_horizon = r.config["t"].get<double>();
  opt.workers = r.workers();
  if (opt.budget < 1) throw ConfigError("budget must be positive");
  Rng rng = make_stream(r.seed(), 0);
  r.write("rank.json", io::dump(io::to_json(search_rank_certificate(r.model, r.x0(), opt, rng))));
}

inline void cmd_r0v(Run& r) {
  const ChainOptions o = r.chain();
  const DensityEstimate e = estimate_chain_density(r.model, r.x0(), r.grid(), o);
  const HoldingTimeReport rep = check_r0v(r.model, e, r.config["samples"].get<long>(), r.seed() + 1, r.workers());
  Json j = io::to_json(rep);
  if (r.model.intensity.upper_bound) j["lower_bound"] = 1.0 / *r.model.intensity.upper_bound;
  if (r.model.intensity.lower_bound) j["upper_bound"] = 1.0 / *r.model.intensity.lower_bound;
  write_density(r, e, {{"estimator", "embedded-chain"}, {"N", o.steps}, {"paths", o.paths}});
  r.write("r0v.json", io::dump(j));
}

inline void cmd_list_models(Run& r) {
  Json models = Json::array();
  for (const auto& e : model_registry())
    models.push_back({{"id", e.id}, {"description", e.description}, {"params", e.defaults}});
  r.write("models.json", io::dump(models));
  for (const auto& e : model_registry()) std::cout << e.id << "  " << e.description << "\n";
}

}  // namespace detail

/// Executes one run and writes <outdir>/<run_id>/{manifest.json, config.json, ...}.
/// Returns the process exit status.
inline int run(const Json& user_config, std::ostream& err = std::cerr) {
  const auto started = std::chrono::steady_clock::now();
  try {
    detail::Run r;
    r.config = resolve_config(user_config);
    const ModelEntry& entry = find_model(r.config["model"].get<std::string>());
    r.model = entry.build(r.config["params"], r.config["ode_tol"].get<double>());
    r.dir = std::filesystem::path(r.config["outdir"].get<std::string>()) / r.config["run_id"].get<std::string>();
    std::filesystem::create_directories(r.dir);
    r.write("config.json", io::dump(r.config));
    const auto cmd = r.config["command"].get<std::string>();
    if (cmd == "simulate") detail::cmd_simulate(r);
    else if (cmd == "estimate-chain") detail::cmd_estimate_chain(r);
    else if (cmd == "estimate-flow") detail::cmd_estimate_flow(r);
    else if (cmd == "stationarity") detail::cmd_stationarity(r);
    else if (cmd == "stability") detail::cmd_stability(r);
    else if (cmd == "drift") detail::cmd_drift(r);
    else if (cmd == "rank") detail::cmd_rank(r);
    else if (cmd == "r0v") detail::cmd_r0v(r);
    else detail::cmd_list_models(r);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    Json manifest = {{"run_id", r.config["run_id"]},
                     {"command", cmd},
                     {"model", entry.id},
                     {"seed", r.seed()},
                     {"version", kVersion},
                     {"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"files", r.files},
                     {"wall_time_s", wall}};
    io::write_file(r.dir / "manifest.json", io::dump(manifest));
    return kOk;
  } catch (const ExplosionError& e) {
    err << "explosion: " << e.what() << "\n";
    return kExplosion;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const GridError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const TruncationError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Error& e) {
    err << "model error: " << e.what() << "\n";
    return kDomain;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
}

inline Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

}  // namespace pdmp::cli

#endif  // PDMP_CLI_HPP
