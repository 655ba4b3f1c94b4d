#ifndef PDMP_REGISTRY_HPP
#define PDMP_REGISTRY_HPP

#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmp/drift.hpp"
#include "pdmp/grid.hpp"
#include "pdmp/models.hpp"

namespace pdmp {

using ParamTable = nlohmann::ordered_json;

/// A named built-in model with its parameter table and run defaults.
struct ModelEntry {
  std::string id;
  std::string description;
  ParamTable defaults;
  std::function<PdmpModel(const ParamTable&, double tolerance)> build;
  std::function<State(const ParamTable&)> default_start;
  std::function<GridSpec(const ParamTable&)> default_grid;
  /// Lyapunov function (and optional reduced integrand) for `drift`; empty if none ships.
  std::function<void(const ParamTable&, DriftSpec&)> lyapunov;
};

namespace detail {

inline double param(const ParamTable& t, const char* key) { return t.at(key).get<double>(); }

inline GeneExpressionParams gene_params(const ParamTable& t) {
  GeneExpressionParams p;
  p.gamma1 = param(t, "gamma1");
  p.gamma2 = param(t, "gamma2");
  p.beta2 = param(t, "beta2");
  p.b = param(t, "b");
  p.kappa1 = param(t, "kappa1");
  p.kappa2 = param(t, "kappa2");
  p.kappa3 = param(t, "kappa3");
  p.hill_n = param(t, "N");
  return p;
}

inline DecayToyParams decay_params(const ParamTable& t) {
  DecayToyParams p;
  p.relax = param(t, "relax");
  p.level = param(t, "level");
  p.rate = param(t, "rate");
  p.uniform_factor = t.at("uniform_factor").get<bool>();
  p.factor = param(t, "factor");
  return p;
}

inline std::vector<ModelEntry> make_registry() {
  std::vector<ModelEntry> r;

  ModelEntry gene;
  gene.id = "gene";
  gene.description = "mRNA/protein bursting with Hill-type burst intensity";
  gene.defaults = {{"gamma1", 2.0}, {"gamma2", 1.0}, {"beta2", 1.0}, {"b", 1.0},
                   {"kappa1", 1.0}, {"kappa2", 1.0}, {"kappa3", 1.0}, {"N", 1.0}};
  gene.build = [](const ParamTable& t, double tol) { return build_gene_model(gene_params(t), tol); };
  gene.default_start = [](const ParamTable&) { return make_state({1.0, 1.0}); };
  gene.default_grid = [](const ParamTable&) { return GridSpec::box({0.0, 0.0}, {6.0, 4.0}, {30, 30}); };
  gene.lyapunov = [](const ParamTable& t, DriftSpec& spec) {
    const GeneExpressionParams p = gene_params(t);
    spec.lyapunov = [p](const State& x) { return p.lyapunov(x); };
    spec.reduced_integrand = [p](double s, const State& x) { return p.drift_integrand(s, x); };
  };
  r.push_back(gene);

  ModelEntry bd;
  bd.id = "birth-death";
  bd.description = "switching between modes 0..modes-1 with constant birth/death rates; mode i relaxes x toward i";
  bd.defaults = {{"modes", 40}, {"birth", 1.0}, {"death", 2.0}};
  bd.build = [](const ParamTable& t, double tol) {
    const int modes = t.at("modes").get<int>();
    const double b = param(t, "birth"), d = param(t, "death");
    SwitchingSystem sys = birth_death_system(modes, [b](int) { return b; }, [d](int) { return d; });
    sys.tolerance = tol;
    return build_switching_model(sys, "birth-death");
  };
  bd.default_start = [](const ParamTable&) { return make_state({0.0, 0.0}); };
  bd.default_grid = [](const ParamTable& t) {
    const int modes = t.at("modes").get<int>();
    GridSpec g;
    g.axes = {Axis::continuous(0.0, static_cast<double>(modes), 20), Axis::integers(0, modes - 1)};
    return g;
  };
  r.push_back(bd);

  ModelEntry kato;
  kato.id = "kato-shift";
  kato.description = "pure-jump shift k -> k+1 on the integers at rate k^2+1 (explosive)";
  kato.defaults = ParamTable::object();
  kato.build = [](const ParamTable&, double) { return build_kato_shift(); };
  kato.default_start = [](const ParamTable&) { return make_state({1.0}); };
  kato.default_grid = [](const ParamTable&) {
    GridSpec g;
    g.axes = {Axis::integers(0, 100)};
    return g;
  };
  r.push_back(kato);

  ModelEntry decay;
  decay.id = "decay-toy";
  decay.description = "x relaxes toward `level`, jumps at constant rate multiply x by a fixed or Uniform(0,1) factor";
  decay.defaults = {{"relax", 0.0}, {"level", 0.0}, {"rate", 1.0}, {"uniform_factor", false}, {"factor", 0.5}};
  decay.build = [](const ParamTable& t, double) { return build_decay_toy(decay_params(t)); };
  decay.default_start = [](const ParamTable&) { return make_state({1.0}); };
  decay.default_grid = [](const ParamTable&) { return GridSpec::box({0.0}, {1.5}, {50}); };
  decay.lyapunov = [](const ParamTable&, DriftSpec& spec) {
    spec.lyapunov = [](const State& x) { return x[0]; };
  };
  r.push_back(decay);

  ModelEntry heavy;
  heavy.id = "heavy-tail";
  heavy.description = "x' = 1 with intensity 1/(1+x); holding times have infinite mean";
  heavy.defaults = ParamTable::object();
  heavy.build = [](const ParamTable&, double) { return build_heavy_tail_toy(); };
  heavy.default_start = [](const ParamTable&) { return make_state({0.0}); };
  heavy.default_grid = [](const ParamTable&) { return GridSpec::box({0.0}, {20.0}, {40}); };
  r.push_back(heavy);

  return r;
}

}  // namespace detail

inline const std::vector<ModelEntry>& model_registry() {
  static const std::vector<ModelEntry> r = detail::make_registry();
  return r;
}

inline const ModelEntry& find_model(const std::string& id) {
  for (const auto& e : model_registry())
    if (e.id == id) return e;
  throw ConfigError("unknown model '" + id + "'");
}

/// Defaults overlaid with `overrides`; unknown or mistyped keys are rejected.
inline ParamTable resolve_params(const ModelEntry& entry, const ParamTable& overrides) {
  if (!overrides.is_null() && !overrides.is_object()) throw ConfigError("params must be an object");
  ParamTable out = entry.defaults;
  if (overrides.is_object()) {
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
      if (!out.contains(it.key())) throw ConfigError("model '" + entry.id + "' has no parameter '" + it.key() + "'");
      const auto& def = out[it.key()];
      const bool ok = def.is_boolean() ? it.value().is_boolean()
                      : def.is_number_integer() ? it.value().is_number_integer()
                                                : it.value().is_number();
      if (!ok) throw ConfigError("parameter '" + it.key() + "' has the wrong type");
      out[it.key()] = it.value();
    }
  }
  return out;
}

}  // namespace pdmp

#endif  // PDMP_REGISTRY_HPP
