#ifndef PDMP_IO_HPP
#define PDMP_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmp/density.hpp"
#include "pdmp/drift.hpp"
#include "pdmp/grid.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/rankcheck.hpp"
#include "pdmp/simulate.hpp"

namespace pdmp::io {

using Json = nlohmann::ordered_json;

/// Round-trip decimal form of a double.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json to_json(const State& x) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

inline Json to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const GridSpec& g) {
  Json axes = Json::array();
  for (const auto& a : g.axes)
    axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"bins", a.bins}, {"discrete", a.discrete}});
  return axes;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// path_id,k,t_k,pre_0..,post_0..,theta_0..; k = 0 is the initial state.
inline std::string trajectories_csv(const std::vector<Trajectory>& paths, int dimension, int theta_dimension) {
  std::string s = "path_id,k,t_k";
  for (int i = 0; i < dimension; ++i) s += ",pre_" + std::to_string(i);
  for (int i = 0; i < dimension; ++i) s += ",post_" + std::to_string(i);
  for (int i = 0; i < theta_dimension; ++i) s += ",theta_" + std::to_string(i);
  s += "\n";
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& tr = paths[p];
    s += std::to_string(p) + ",0,0";
    for (int r = 0; r < 2; ++r)
      for (int i = 0; i < dimension; ++i) s += "," + num(tr.initial[i]);
    for (int i = 0; i < theta_dimension; ++i) s += ",";
    s += "\n";
    for (std::size_t k = 0; k < tr.jumps.size(); ++k) {
      const auto& j = tr.jumps[k];
      s += std::to_string(p) + "," + std::to_string(k + 1) + "," + num(j.time);
      for (int i = 0; i < dimension; ++i) s += "," + num(j.pre_jump[i]);
      for (int i = 0; i < dimension; ++i) s += "," + num(j.post_jump[i]);
      for (int i = 0; i < theta_dimension; ++i) s += "," + (i < j.theta.size() ? num(j.theta[i]) : std::string());
      s += "\n";
    }
  }
  return s;
}

/// One row per cell: index per axis, cell center per axis, mass, density.
inline std::string density_csv(const DensityEstimate& e) {
  const int d = e.grid.dimension();
  std::string s;
  for (int i = 0; i < d; ++i) s += "i" + std::to_string(i) + ",";
  for (int i = 0; i < d; ++i) s += "center_" + std::to_string(i) + ",";
  s += "mass,density\n";
  for (std::size_t c = 0; c < e.mass.size(); ++c) {
    const auto k = e.grid.unflatten(c);
    const State ctr = e.grid.center(c);
    for (int i = 0; i < d; ++i) s += std::to_string(k[static_cast<std::size_t>(i)]) + ",";
    for (int i = 0; i < d; ++i) s += num(ctr[i]) + ",";
    s += num(e.mass[c]) + "," + num(e.density(c)) + "\n";
  }
  return s;
}

inline Json density_json(const DensityEstimate& e) {
  return {{"grid", to_json(e.grid)},
          {"samples", e.samples},
          {"burn_in", e.burn_in},
          {"in_box_mass", e.in_box_mass()},
          {"out_of_box", e.out_of_box}};
}

/// Marginal profile along one axis: bin, center, mass.
inline std::string marginal_csv(const DensityEstimate& e, int axis) {
  const auto m = marginal(e, axis);
  const auto& a = e.grid.axes[static_cast<std::size_t>(axis)];
  std::string s = "bin,center,mass\n";
  for (std::size_t k = 0; k < m.size(); ++k)
    s += std::to_string(k) + "," + num(a.center(static_cast<int>(k))) + "," + num(m[k]) + "\n";
  return s;
}

/// Cell bounds per axis, probability, error bound.
inline std::string oracle_csv(const KernelOracleGrid& o) {
  const int d = o.grid.dimension();
  std::string s;
  for (int i = 0; i < d; ++i) s += "lo_" + std::to_string(i) + ",hi_" + std::to_string(i) + ",";
  s += "probability,error_bound\n";
  for (std::size_t c = 0; c < o.cell_mass.size(); ++c) {
    const auto k = o.grid.unflatten(c);
    for (int i = 0; i < d; ++i) {
      const auto& a = o.grid.axes[static_cast<std::size_t>(i)];
      s += num(a.cell_lo(k[static_cast<std::size_t>(i)])) + "," + num(a.cell_hi(k[static_cast<std::size_t>(i)])) + ",";
    }
    s += num(o.cell_mass[c]) + "," + num(o.truncation_bound) + "\n";
  }
  return s;
}

inline Json to_json(const RankReport& r) {
  Json seq = Json::array();
  for (const auto& st : r.sequence) seq.push_back({{"theta", to_json(st.theta)}, {"s", st.s}});
  Json j = {{"point", to_json(r.point)},
            {"sequence", seq},
            {"matrix_kind", r.kind == MatrixKind::Chain ? "chain" : "continuous"},
            {"mode", r.mode == JacobianMode::ThetaAndS ? "theta-and-s" : "s-only"}};
  if (r.kind == MatrixKind::Continuous) j["time_horizon"] = r.time_horizon;
  j["matrix"] = to_json(r.matrix);
  j["singular_values"] = to_json(r.singular);
  j["tau_rank"] = r.tau_rank;
  j["numeric_rank"] = r.numeric_rank;
  j["target_rank"] = r.target_rank;
  j["weight"] = r.weight;
  j["image"] = to_json(r.image);
  j["verdict"] = r.verdict;
  j["status"] = to_string(r.status);
  return j;
}

inline Json to_json(const DriftReport& r) {
  Json pts = Json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i)
    pts.push_back({{"x", to_json(r.points[i])}, {"D", r.drift[i]}, {"in_B0", static_cast<bool>(r.inside[i])}});
  return {{"B0", {{"lo", r.b0_lo}, {"hi", r.b0_hi}}},
          {"c1", r.c1},
          {"c2", r.c2},
          {"verdict", r.verdict},
          {"occupation_bound", r.occupation_bound},
          {"scope", "inequality certified on the listed grid points only"},
          {"grid", pts}};
}

inline Json to_json(const HoldingTimeReport& r) {
  return {{"estimate", r.estimate},
          {"standard_error", r.standard_error},
          {"samples", r.samples},
          {"doubled_estimate", r.doubled_estimate},
          {"doubled_standard_error", r.doubled_standard_error},
          {"shift", r.shift},
          {"stable", r.stable}};
}

/// t,i,j,l1 rows of a stability probe.
inline std::string stability_csv(const StabilityCurves& c) {
  std::string s = "t,start_i,start_j,l1\n";
  for (std::size_t p = 0; p < c.pairs.size(); ++p)
    for (std::size_t k = 0; k < c.times.size(); ++k)
      s += num(c.times[k]) + "," + std::to_string(c.pairs[p].first) + "," + std::to_string(c.pairs[p].second) + "," +
           num(c.l1[p][k]) + "\n";
  return s;
}

}  // namespace pdmp::io

#endif  // PDMP_IO_HPP
