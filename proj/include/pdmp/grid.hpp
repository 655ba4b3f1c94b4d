#ifndef PDMP_GRID_HPP
#define PDMP_GRID_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/core.hpp"

namespace pdmp {

/// One histogram axis. Continuous axes split [lo, hi) into `bins` equal
/// cells; discrete axes have one cell per integer in [lo, hi].
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 1;
  bool discrete = false;

  static Axis continuous(double lo, double hi, int bins) { return {lo, hi, bins, false}; }
  static Axis integers(int lo, int hi) { return {double(lo), double(hi), hi - lo + 1, true}; }

  double width() const { return discrete ? 1.0 : (hi - lo) / bins; }

  std::optional<int> locate(double v) const {
    if (discrete) {
      const double r = std::round(v);
      if (r < lo || r > hi) return std::nullopt;
      return static_cast<int>(r - lo);
    }
    if (!(v >= lo) || !(v < hi)) return std::nullopt;
    // Same expression at every resolution, so power-of-two refinements nest exactly.
    const int k = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    return k < bins ? k : bins - 1;
  }

  double cell_lo(int k) const { return discrete ? lo + k : lo + (hi - lo) * k / bins; }
  double cell_hi(int k) const { return discrete ? lo + k : lo + (hi - lo) * (k + 1) / bins; }
  double center(int k) const { return discrete ? lo + k : 0.5 * (cell_lo(k) + cell_hi(k)); }
};

struct GridSpec {
  std::vector<Axis> axes;

  static GridSpec box(const std::vector<double>& lo, const std::vector<double>& hi, const std::vector<int>& bins) {
    GridSpec g;
    for (std::size_t i = 0; i < lo.size(); ++i) g.axes.push_back(Axis::continuous(lo[i], hi[i], bins[i]));
    g.validate();
    return g;
  }

  int dimension() const { return static_cast<int>(axes.size()); }

  void validate() const {
    if (axes.empty()) throw GridError("grid has no axes");
    for (const auto& a : axes) {
      if (a.discrete) {
        if (a.hi < a.lo) throw GridError("discrete axis with hi < lo");
      } else {
        if (a.bins < 2) throw GridError("continuous axis needs at least 2 bins");
        if (!(a.hi > a.lo)) throw GridError("grid box must have positive volume");
      }
    }
  }

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.bins);
    return n;
  }

  /// Flat index, first axis varying slowest.
  std::optional<std::size_t> locate(const State& x) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto k = axes[i].locate(x[static_cast<Eigen::Index>(i)]);
      if (!k) return std::nullopt;
      idx = idx * static_cast<std::size_t>(axes[i].bins) + static_cast<std::size_t>(*k);
    }
    return idx;
  }

  std::vector<int> unflatten(std::size_t idx) const {
    std::vector<int> out(axes.size());
    for (std::size_t i = axes.size(); i-- > 0;) {
      const auto b = static_cast<std::size_t>(axes[i].bins);
      out[i] = static_cast<int>(idx % b);
      idx /= b;
    }
    return out;
  }

  double cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes) v *= a.width();
    return v;
  }

  State center(std::size_t idx) const {
    const auto k = unflatten(idx);
    State c(dimension());
    for (std::size_t i = 0; i < axes.size(); ++i) c[static_cast<Eigen::Index>(i)] = axes[i].center(k[i]);
    return c;
  }

  /// Uniform draw inside cell `idx` (discrete axes are exact).
  State sample_in_cell(std::size_t idx, Rng& rng) const {
    const auto k = unflatten(idx);
    State c(dimension());
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto& a = axes[i];
      c[static_cast<Eigen::Index>(i)] =
          a.discrete ? a.center(k[i]) : a.cell_lo(k[i]) + (a.cell_hi(k[i]) - a.cell_lo(k[i])) * uniform01(rng);
    }
    return c;
  }

  /// Every continuous axis split `factor` times finer.
  GridSpec refined(int factor) const {
    GridSpec g = *this;
    for (auto& a : g.axes)
      if (!a.discrete) a.bins *= factor;
    return g;
  }

  bool operator==(const GridSpec& o) const {
    if (axes.size() != o.axes.size()) return false;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto &a = axes[i], &b = o.axes[i];
      if (a.lo != b.lo || a.hi != b.hi || a.bins != b.bins || a.discrete != b.discrete) return false;
    }
    return true;
  }
};

/// Normalized histogram over a grid plus an explicit out-of-box cell.
struct DensityEstimate {
  GridSpec grid;
  std::vector<double> mass;
  double out_of_box = 0.0;
  long samples = 0;
  long burn_in = 0;

  double in_box_mass() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
  }

  double density(std::size_t idx) const { return mass[idx] / grid.cell_volume(); }

  /// Draws a point from the in-box part of the estimate.
  State sample(Rng& rng) const;
};

/// Weighted accumulator behind DensityEstimate.
class Histogram {
 public:
  explicit Histogram(GridSpec grid) : grid_(std::move(grid)), weight_(grid_.cell_count(), 0.0) {
    grid_.validate();
  }

  void add(const State& x, double w = 1.0) {
    if (auto idx = grid_.locate(x))
      weight_[*idx] += w;
    else
      out_ += w;
    total_ += w;
    ++count_;
  }

  void add_cell(std::optional<std::size_t> idx, double w) {
    if (idx)
      weight_[*idx] += w;
    else
      out_ += w;
    total_ += w;
    ++count_;
  }

  void merge(const Histogram& other) {
    if (!(grid_ == other.grid_)) throw GridError("cannot merge histograms on different grids");
    for (std::size_t i = 0; i < weight_.size(); ++i) weight_[i] += other.weight_[i];
    out_ += other.out_;
    total_ += other.total_;
    count_ += other.count_;
  }

  const GridSpec& grid() const { return grid_; }
  double total() const { return total_; }
  long count() const { return count_; }
  const std::vector<double>& weights() const { return weight_; }
  double out_weight() const { return out_; }

  DensityEstimate finish(long burn_in = 0) const {
    DensityEstimate e{grid_, std::vector<double>(weight_.size(), 0.0), 0.0, count_, burn_in};
    if (total_ > 0.0) {
      for (std::size_t i = 0; i < weight_.size(); ++i) e.mass[i] = weight_[i] / total_;
      e.out_of_box = out_ / total_;
    }
    return e;
  }

 private:
  GridSpec grid_;
  std::vector<double> weight_;
  double out_ = 0.0;
  double total_ = 0.0;
  long count_ = 0;
};

inline State DensityEstimate::sample(Rng& rng) const {
  const double total = in_box_mass();
  if (total <= 0.0) throw GridError("cannot sample from an estimate with no in-box mass");
  double u = uniform01(rng) * total;
  std::size_t idx = 0;
  for (; idx + 1 < mass.size(); ++idx) {
    if (u < mass[idx]) break;
    u -= mass[idx];
  }
  while (mass[idx] == 0.0 && idx > 0) --idx;
  return grid.sample_in_cell(idx, rng);
}

/// TV distance including the out-of-box cell.
inline double total_variation(const DensityEstimate& a, const DensityEstimate& b) {
  if (!(a.grid == b.grid)) throw GridError("total_variation: grids differ");
  double s = std::abs(a.out_of_box - b.out_of_box);
  for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
  return 0.5 * s;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw GridError("total_variation: sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Merges `factor` x ... x `factor` blocks of continuous cells.
inline DensityEstimate coarsen(const DensityEstimate& fine, int factor) {
  GridSpec coarse = fine.grid;
  for (auto& a : coarse.axes) {
    if (a.discrete) continue;
    if (a.bins % factor != 0) throw GridError("coarsen: bins not divisible by factor");
    a.bins /= factor;
  }
  DensityEstimate out{coarse, std::vector<double>(coarse.cell_count(), 0.0), fine.out_of_box, fine.samples,
                      fine.burn_in};
  for (std::size_t i = 0; i < fine.mass.size(); ++i) {
    auto k = fine.grid.unflatten(i);
    std::size_t idx = 0;
    for (std::size_t ax = 0; ax < k.size(); ++ax) {
      const int kk = coarse.axes[ax].discrete ? k[ax] : k[ax] / factor;
      idx = idx * static_cast<std::size_t>(coarse.axes[ax].bins) + static_cast<std::size_t>(kk);
    }
    out.mass[idx] += fine.mass[i];
  }
  return out;
}

/// Marginal masses along one axis (out-of-box mass excluded).
inline std::vector<double> marginal(const DensityEstimate& e, int axis) {
  std::vector<double> out(static_cast<std::size_t>(e.grid.axes[static_cast<std::size_t>(axis)].bins), 0.0);
  for (std::size_t i = 0; i < e.mass.size(); ++i)
    out[static_cast<std::size_t>(e.grid.unflatten(i)[static_cast<std::size_t>(axis)])] += e.mass[i];
  return out;
}

}  // namespace pdmp

#endif  // PDMP_GRID_HPP
