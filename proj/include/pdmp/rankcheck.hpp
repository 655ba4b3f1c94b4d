#ifndef PDMP_RANKCHECK_HPP
#define PDMP_RANKCHECK_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "pdmp/core.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/random.hpp"

namespace pdmp {

/// Which parameters the Jacobian differentiates: s^n only, or (theta^n, s^n).
enum class JacobianMode { SOnly, ThetaAndS };

inline JacobianMode default_mode(const PdmpModel& model) {
  return model.jumps.kind == ThetaKind::Continuous ? JacobianMode::ThetaAndS : JacobianMode::SOnly;
}

inline int columns_per_stage(const PdmpModel& model, JacobianMode mode) {
  return (mode == JacobianMode::ThetaAndS && model.jumps.kind == ThetaKind::Continuous)
             ? model.jumps.theta_dimension + 1
             : 1;
}

namespace detail {

inline double fd_step(double v) { return std::max(1e-6, 1e-7 * std::abs(v)); }

inline Matrix transform_state_jacobian(const PdmpModel& model, const Theta& th, const State& z) {
  if (model.jumps.state_jacobian) return model.jumps.state_jacobian(th, z);
  const int d = static_cast<int>(z.size());
  Matrix j(d, d);
  for (int c = 0; c < d; ++c) {
    const double h = fd_step(z[c]);
    State up = z, down = z;
    up[c] += h;
    down[c] -= h;
    j.col(c) = (model.jumps.transform(th, up) - model.jumps.transform(th, down)) / (2.0 * h);
  }
  return j;
}

inline Matrix transform_theta_jacobian(const PdmpModel& model, const Theta& th, const State& z) {
  if (model.jumps.theta_jacobian) return model.jumps.theta_jacobian(th, z);
  const int k = static_cast<int>(th.size());
  Matrix j(z.size(), k);
  for (int c = 0; c < k; ++c) {
    const double h = fd_step(th[c]);
    Theta up = th, down = th;
    up[c] += h;
    down[c] -= h;
    j.col(c) = (model.jumps.transform(up, z) - model.jumps.transform(down, z)) / (2.0 * h);
  }
  return j;
}

/// Keeps only rows of continuous coordinates.
inline Matrix continuous_rows(const StateSpace& space, const Matrix& m) {
  const auto axes = space.continuous_axes();
  Matrix out(static_cast<Eigen::Index>(axes.size()), m.cols());
  for (std::size_t r = 0; r < axes.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(axes[r]);
  return out;
}

inline Matrix continuous_block(const StateSpace& space, const Matrix& m) {
  const auto axes = space.continuous_axes();
  const auto n = static_cast<Eigen::Index>(axes.size());
  Matrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = m(axes[static_cast<std::size_t>(r)], axes[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace detail

/// Per-stage factors of the composed-map derivative. Stage j acts at y_j:
/// xi[j] = d T_(theta,s)(y)/dy and psi[j] = d T_(theta,s)(y)/d(theta,s) at
/// y = y_j, (theta, s) = stage j. Rows and columns of discrete coordinates
/// are dropped.
struct JacobianFactors {
  std::vector<Matrix> xi;
  std::vector<Matrix> psi;
  std::vector<State> intermediates;
};

inline JacobianFactors jacobian_factors(const PdmpModel& model, const State& x, const std::vector<JumpStage>& stages,
                                        JacobianMode mode) {
  if (model.jumps.kind == ThetaKind::Discrete) mode = JacobianMode::SOnly;
  JacobianFactors f;
  State y = x;
  f.intermediates.push_back(y);
  const auto& space = model.space;
  for (const auto& st : stages) {
    const State z = detail::flow_raw(model, y, st.s);
    const Matrix tx = mask_discrete(space, detail::transform_state_jacobian(model, st.theta, z), true, true);
    const Matrix dflow = flow_jacobian(model, y, st.s);
    f.xi.push_back(detail::continuous_block(space, tx * dflow));
    const Matrix gcol = tx * field_at(model, z);
    Matrix psi;
    if (mode == JacobianMode::ThetaAndS) {
      const Matrix tt = mask_discrete(space, detail::transform_theta_jacobian(model, st.theta, z), true, false);
      psi.resize(tt.rows(), tt.cols() + 1);
      psi << tt, gcol;
    } else {
      psi = gcol;
    }
    f.psi.push_back(detail::continuous_rows(space, psi));
    y = model.jumps.transform(st.theta, z);
    f.intermediates.push_back(y);
  }
  return f;
}

/// d T_(theta^n,s^n)(x) / d(theta^n, s^n) assembled as
/// [Xi_{n-1}...Xi_1 Psi_0 | ... | Xi_{n-1} Psi_{n-2} | Psi_{n-1}].
inline Matrix assemble_chain(const JacobianFactors& f) {
  const std::size_t n = f.psi.size();
  if (n == 0) return Matrix(0, 0);
  const Eigen::Index rows = f.psi.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : f.psi) cols += p.cols();
  Matrix out(rows, cols);
  Eigen::Index c = cols;
  Matrix prod = Matrix::Identity(rows, rows);
  for (std::size_t j = n; j-- > 0;) {
    const Matrix block = prod * f.psi[j];
    c -= block.cols();
    out.middleCols(c, block.cols()) = block;
    prod = prod * f.xi[j];
  }
  return out;
}

inline Matrix jacobian_chain(const PdmpModel& model, const State& x, const std::vector<JumpStage>& stages,
                             JacobianMode mode) {
  if (stages.empty()) return Matrix(model.space.continuous_dimension(), 0);
  return assemble_chain(jacobian_factors(model, x, stages, mode));
}

/// Central finite differences of the composed map (independent of the factor assembly).
inline Matrix jacobian_chain_fd(const PdmpModel& model, const State& x, const std::vector<JumpStage>& stages,
                                JacobianMode mode, double time_horizon = -1.0) {
  if (model.jumps.kind == ThetaKind::Discrete) mode = JacobianMode::SOnly;
  const int per = columns_per_stage(model, mode);
  const int d = model.space.continuous_dimension();
  Matrix out(d, per * static_cast<int>(stages.size()));
  auto eval = [&](const std::vector<JumpStage>& seq) {
    State y = ComposedJumpMap(model, seq).evaluate(x);
    if (time_horizon >= 0.0) {
      double total = 0.0;
      for (const auto& st : seq) total += st.s;
      y = detail::flow_raw(model, y, time_horizon - total);
    }
    return detail::continuous_rows(model.space, Matrix(y));
  };
  int col = 0;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (per > 1) {
      for (int c = 0; c < model.jumps.theta_dimension; ++c) {
        auto up = stages, down = stages;
        const double h = detail::fd_step(stages[k].theta[c]);
        up[k].theta[c] += h;
        down[k].theta[c] -= h;
        out.col(col++) = (eval(up) - eval(down)) / (2.0 * h);
      }
    }
    auto up = stages, down = stages;
    const double h = detail::fd_step(stages[k].s);
    up[k].s += h;
    if (stages[k].s > h) {
      down[k].s -= h;
      out.col(col++) = (eval(up) - eval(down)) / (2.0 * h);
    } else {
      out.col(col++) = (eval(up) - eval(down)) / h;
    }
  }
  return out;
}

/// Limit of d T/d s^n as every s_i -> 0+: columns
/// T'_{theta_n}(y_{n-1}) ... T'_{theta_{j+1}}(y_j) g(y_j), y_j = T_{theta_j}(y_{j-1}).
inline Matrix limit_matrix_chain(const PdmpModel& model, const State& x, const std::vector<Theta>& thetas) {
  const auto n = thetas.size();
  std::vector<State> ys{x};
  std::vector<Matrix> tprime;
  for (const auto& th : thetas) {
    tprime.push_back(mask_discrete(model.space, detail::transform_state_jacobian(model, th, ys.back()), true, true));
    ys.push_back(model.jumps.transform(th, ys.back()));
  }
  const int d = static_cast<int>(x.size());
  Matrix out(d, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    Matrix col = field_at(model, ys[j]);
    for (std::size_t i = j; i < n; ++i) col = tprime[i] * col;
    out.col(static_cast<Eigen::Index>(j)) = col;
  }
  return detail::continuous_rows(model.space, out);
}

/// Limit form of the continuous-time matrix: each column minus g(y_n).
inline Matrix limit_matrix_continuous(const PdmpModel& model, const State& x, const std::vector<Theta>& thetas) {
  Matrix m = limit_matrix_chain(model, x, thetas);
  State y = x;
  for (const auto& th : thetas) y = model.jumps.transform(th, y);
  const Matrix gn = detail::continuous_rows(model.space, Matrix(field_at(model, y)));
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) -= gn.col(0);
  return m;
}

/// d pi_{t-s(n)} T_(theta^n,s^n)(x) / d(theta^n, s^n): each stage block is
/// Upsilon_x times the chain block, and each s-column also picks up
/// -g(pi_{t-s(n)} y_n) from the shortened terminal flow.
inline Matrix jacobian_continuous(const PdmpModel& model, const State& x, const std::vector<JumpStage>& stages,
                                  double t, JacobianMode mode) {
  double total = 0.0;
  for (const auto& st : stages) total += st.s;
  if (!(total < t)) throw ConfigError("jacobian_continuous: need s_1 + ... + s_n < t");
  if (stages.empty()) return Matrix(model.space.continuous_dimension(), 0);
  if (model.jumps.kind == ThetaKind::Discrete) mode = JacobianMode::SOnly;
  const JacobianFactors f = jacobian_factors(model, x, stages, mode);
  const Matrix chain = assemble_chain(f);
  const State& yn = f.intermediates.back();
  const double tau = t - total;
  const Matrix ux = detail::continuous_block(model.space, flow_jacobian(model, yn, tau));
  const Matrix gend =
      detail::continuous_rows(model.space, Matrix(field_at(model, detail::flow_raw(model, yn, tau))));
  Matrix out = ux * chain;
  const int per = columns_per_stage(model, mode);
  for (std::size_t k = 0; k < stages.size(); ++k) out.col(static_cast<Eigen::Index>(per * (k + 1) - 1)) -= gend.col(0);
  return out;
}

inline Matrix jacobian_continuous_fd(const PdmpModel& model, const State& x, const std::vector<JumpStage>& stages,
                                     double t, JacobianMode mode) {
  return jacobian_chain_fd(model, x, stages, mode, t);
}

// ---------------------------------------------------------------------------

inline Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

/// Count of singular values above tau * sigma_max.
inline int numeric_rank(const Eigen::VectorXd& sv, double tau) {
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tau * sv[0]) ++r;
  return r;
}

inline int numeric_rank(const Matrix& m, double tau = 1e-8) { return numeric_rank(singular_values(m), tau); }

enum class MatrixKind { Chain, Continuous };
enum class RankStatus { Certified, NotCertified, Inconclusive };

inline const char* to_string(RankStatus s) {
  switch (s) {
    case RankStatus::Certified: return "certified";
    case RankStatus::NotCertified: return "not-certified";
    case RankStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct RankReport {
  State point;
  std::vector<JumpStage> sequence;
  MatrixKind kind = MatrixKind::Chain;
  JacobianMode mode = JacobianMode::ThetaAndS;
  double time_horizon = 0.0;
  Matrix matrix;
  Eigen::VectorXd singular;
  double tau_rank = 1e-8;
  int numeric_rank = 0;
  int target_rank = 0;
  double weight = 0.0;
  /// Image point T_(theta^n,s^n)(x) (or its terminal flow for Continuous).
  State image;
  bool verdict = false;
  RankStatus status = RankStatus::NotCertified;

  /// sigma_d / sigma_max, 0 when fewer than d singular values exist.
  double conditioning() const {
    if (target_rank == 0 || singular.size() < target_rank || singular[0] <= 0.0) return 0.0;
    return singular[target_rank - 1] / singular[0];
  }
};

/// Rank test at one sequence: verdict = (numeric rank == d) and k > 0.
inline RankReport rank_report(const PdmpModel& model, const State& x, const std::vector<JumpStage>& stages,
                              MatrixKind kind, JacobianMode mode, double tau_rank = 1e-8, double t = 0.0) {
  RankReport r;
  r.point = x;
  r.sequence = stages;
  r.kind = kind;
  r.mode = model.jumps.kind == ThetaKind::Discrete ? JacobianMode::SOnly : mode;
  r.time_horizon = t;
  r.tau_rank = tau_rank;
  r.matrix = kind == MatrixKind::Chain ? jacobian_chain(model, x, stages, r.mode)
                                       : jacobian_continuous(model, x, stages, t, r.mode);
  r.singular = singular_values(r.matrix);
  r.numeric_rank = numeric_rank(r.singular, tau_rank);
  r.target_rank = model.space.continuous_dimension();
  const ComposedJumpMap map(model, stages);
  const auto eval = map.apply(x);
  r.weight = stages.empty() ? 0.0 : eval.weight;
  r.image = kind == MatrixKind::Chain ? eval.point : detail::flow_raw(model, eval.point, t - map.total_time());
  r.verdict = !stages.empty() && r.numeric_rank == r.target_rank && r.weight > 0.0;
  r.status = r.verdict ? RankStatus::Certified : RankStatus::NotCertified;
  return r;
}

struct CertificateSearch {
  int max_n = 2;
  int budget = 64;  ///< candidate sequences per n
  double tau_rank = 1e-8;
  JacobianMode mode = JacobianMode::ThetaAndS;
  MatrixKind kind = MatrixKind::Chain;
  /// Horizon t for MatrixKind::Continuous; candidates with s(n) >= t are redrawn.
  double time_horizon = 10.0;
  double mean_s = 1.0;
  unsigned workers = 1;
};

/// Samples sequences and returns the first certified report (lowest index
/// for the smallest n). Without a certificate, returns the best-conditioned
/// report marked Inconclusive: absence of a certificate is never a negative claim.
inline RankReport search_rank_certificate(const PdmpModel& model, const State& x, const CertificateSearch& opt,
                                          Rng& rng) {
  if (opt.max_n < 1 || opt.max_n > 4) throw ConfigError("search_rank_certificate: max_n must be in [1, 4]");
  require_in_space(model, x, "search_rank_certificate");
  std::optional<RankReport> best;
  for (int n = 1; n <= opt.max_n; ++n) {
    std::vector<std::vector<JumpStage>> candidates;
    for (int b = 0; b < opt.budget; ++b) {
      std::vector<JumpStage> seq;
      State y = x;
      double total = 0.0;
      for (int k = 0; k < n; ++k) {
        double s = opt.mean_s * standard_exponential(rng);
        if (opt.kind == MatrixKind::Continuous) {
          // keep s(n) < t by sampling the stage inside the remaining window
          s = (opt.time_horizon - total) * uniform01(rng) * 0.9;
        }
        total += s;
        const State z = detail::flow_raw(model, y, s);
        Theta th = model.jumps.sample(z, rng);
        y = model.jumps.transform(th, z);
        seq.push_back({std::move(th), s});
      }
      candidates.push_back(std::move(seq));
    }
    std::vector<RankReport> reports(candidates.size());
    parallel_for(candidates.size(), opt.workers, [&](std::size_t i) {
      reports[i] = rank_report(model, x, candidates[i], opt.kind, opt.mode, opt.tau_rank, opt.time_horizon);
    });
    for (auto& r : reports) {
      if (r.verdict) return r;
      if (!best || r.conditioning() > best->conditioning()) best = r;
    }
  }
  best->status = RankStatus::Inconclusive;
  return *best;
}

}  // namespace pdmp

#endif  // PDMP_RANKCHECK_HPP
