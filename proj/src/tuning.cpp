#include "wit/tuning.hpp"

#include <cmath>
#include <map>

#include "wit/distributions.hpp"

namespace wit {

LambdaGrid lambda_grid(Index n, Index p) {
  if (n <= 1 || p < 1) throw ConfigError("lambda_grid: need n > 1, p >= 1");
  LambdaGrid g;
  double logp = std::log(static_cast<double>(p));
  if (p == 1) {
    logp = std::log(2.0);
    g.degenerate_p1 = true;
  }
  const double base = std::sqrt(logp / static_cast<double>(n));
  g.values.resize(20);
  for (int k = 1; k <= 20; ++k) g.values[k - 1] = 0.1 * k * base;
  return g;
}

double default_mcd_size(Index n) {
  const double raw = 0.5 / std::log(static_cast<double>(n));
  return std::min(std::max(raw, 0.001), 0.2);
}

McdStatistic mcd_statistic(const IVDataset& ds, const IndexSet& valid_set) {
  if (valid_set.empty())
    throw ConfigError("mcd_statistic: valid set must be nonempty");
  const IVQuadForms q = iv_quad_forms(ds, valid_set);
  if (q.n <= q.p)
    throw DimensionError("mcd_statistic: needs n > p degrees of freedom");
  McdStatistic out;
  out.S = q.A / static_cast<double>(q.n - q.p);
  out.T = (q.B - q.A) / static_cast<double>(q.n);
  auto [lo, hi] = eig2x2_pencil(out.S, out.T);
  (void)hi;
  out.m_min = std::max(lo, 0.0);
  return out;
}

double mcd_critical(Index p_invalid, Index p_valid, Index n, double size) {
  if (!(size > 0.0 && size < 1.0))
    throw ConfigError("mcd_critical: size must be in (0,1)");
  const Index df = p_valid - 1;
  if (df < 1)
    throw ConfigError(
        "mcd_critical: no overidentifying restriction (p_valid <= 1)");
  if (n <= p_invalid + p_valid)
    throw DimensionError("mcd_critical: n too small for the correction");
  const double fac =
      std::sqrt(static_cast<double>(n - p_invalid) /
                static_cast<double>(n - p_invalid - p_valid));
  const double adj = normal_cdf(fac * normal_quantile(size));
  return chi2_quantile(1.0 - adj, static_cast<double>(df));
}

SarganResult sargan(const IVDataset& ds, double beta_hat,
                    const VectorXd& alpha_hat) {
  ds.validate();
  const Index n = ds.n(), p = ds.p();
  if (alpha_hat.size() != p) throw DimensionError("sargan: alpha length");
  const VectorXd e = ds.y - ds.d * beta_hat - ds.z * alpha_hat;
  SarganResult out;
  Index n_valid = 0;
  for (Index j = 0; j < p; ++j)
    if (alpha_hat[j] == 0.0) ++n_valid;
  out.df = static_cast<int>(n_valid) - 1;
  const double ee = e.squaredNorm();
  if (ee <= 0.0) {
    out.statistic = 0.0;
    out.p_value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  Eigen::HouseholderQR<MatrixXd> qr(ds.z);
  VectorXd qte = qr.householderQ().transpose() * e;
  const double proj = qte.head(p).squaredNorm();
  out.statistic = static_cast<double>(n) * proj / ee;
  out.p_value = out.df >= 1 ? 1.0 - chi2_cdf(out.statistic,
                                             static_cast<double>(out.df))
                            : std::numeric_limits<double>::quiet_NaN();
  return out;
}

namespace {

struct CandidateScore {
  Index p_valid = -1;
  double stat = std::numeric_limits<double>::infinity();
  bool set = false;
};

bool better(Index pv, double stat, const CandidateScore& best) {
  if (!best.set) return true;
  if (pv != best.p_valid) return pv > best.p_valid;
  return stat < best.stat;
}

}  // namespace

TuningReport tune(const IVDataset& ds, PenaltyKind kind, double shape,
                  const std::vector<VectorXd>& starts, const TuneConfig& cfg) {
  ds.validate();
  if (starts.empty()) throw ConfigError("tune: need at least one start");
  cfg.solver.validate();

  const Index n = ds.n(), p = ds.p();
  const double size =
      std::isnan(cfg.size) ? default_mcd_size(n) : cfg.size;

  const TransformedDesign td = build_transformed_design(ds);
  VectorXd pen_scale = VectorXd::Ones(p);
  if (ds.scaling)
    for (Index j = 0; j < p; ++j)
      pen_scale[j] = std::max(ds.scaling->z_scale[j], 1.0);

  LambdaGrid grid = lambda_grid(n, p);
  if (cfg.grid_scale != 1.0)
    for (double& v : grid.values) v *= cfg.grid_scale;

  // A and per-candidate B quadratic forms; B cached on the invalid pattern
  MatrixXd w2(n, 2);
  w2.col(0) = ds.y;
  w2.col(1) = ds.d;
  const Eigen::Matrix2d wtw = w2.transpose() * w2;
  Eigen::HouseholderQR<MatrixXd> qr_full(ds.z);
  Eigen::Matrix2d a_quad;
  {
    MatrixXd qtw = qr_full.householderQ().transpose() * w2;
    a_quad = wtw - qtw.topRows(p).transpose() * qtw.topRows(p);
    a_quad = 0.5 * (a_quad + a_quad.transpose());
  }
  std::map<std::vector<bool>, Eigen::Matrix2d> b_cache;
  auto b_quad_for = [&](const std::vector<bool>& invalid_mask,
                        Index n_invalid) -> Eigen::Matrix2d {
    auto it = b_cache.find(invalid_mask);
    if (it != b_cache.end()) return it->second;
    Eigen::Matrix2d b;
    if (n_invalid == 0) {
      b = wtw;
    } else {
      MatrixXd zc(n, n_invalid);
      Index c = 0;
      for (Index j = 0; j < p; ++j)
        if (invalid_mask[static_cast<size_t>(j)]) zc.col(c++) = ds.z.col(j);
      Eigen::HouseholderQR<MatrixXd> qrc(zc);
      MatrixXd qtw = qrc.householderQ().transpose() * w2;
      b = wtw - qtw.topRows(n_invalid).transpose() * qtw.topRows(n_invalid);
      b = 0.5 * (b + b.transpose());
    }
    b_cache.emplace(invalid_mask, b);
    return b;
  };

  TuningReport rep;
  rep.size_used = size;
  CandidateScore best, best_untestable;
  double best_lambda = std::numeric_limits<double>::quiet_NaN();
  double best_u_lambda = std::numeric_limits<double>::quiet_NaN();
  int best_start = -1, best_u_start = -1;
  VectorXd best_alpha, best_u_alpha;

  std::vector<bool> never_valid(static_cast<size_t>(p), true);
  PenaltySpec spec{kind, 0.0, shape};

  for (size_t si = 0; si < starts.size(); ++si) {
    if (starts[si].size() != p) throw DimensionError("tune: bad start length");
    for (double lam : grid.values) {
      spec.lambda = lam;
      const LocalSolution sol =
          ilamm_solve(td, ds.y, spec, starts[si], cfg.solver, pen_scale);

      std::vector<bool> invalid_mask(static_cast<size_t>(p), false);
      Index p_valid = 0;
      for (Index j = 0; j < p; ++j) {
        if (sol.alpha_hat[j] == 0.0)
          ++p_valid;
        else
          invalid_mask[static_cast<size_t>(j)] = true;
      }
      if (p_valid == 0) continue;
      const Index p_invalid = p - p_valid;

      TuneCandidate cand;
      cand.start_id = static_cast<int>(si);
      cand.lambda = lam;
      cand.p_valid = p_valid;

      const Eigen::Matrix2d b_quad = b_quad_for(invalid_mask, p_invalid);
      double kappa;
      try {
        auto [lo, hi] = eig2x2_pencil(a_quad, b_quad);
        (void)hi;
        kappa = std::max(lo, 1.0);
      } catch (const NumericalError&) {
        continue;  // exact-fit candidate; statistic undefined
      }
      cand.mcd_stat = static_cast<double>(n - p) * (kappa - 1.0);

      if (p_valid <= 1) {
        cand.untestable = true;
        cand.threshold = std::numeric_limits<double>::quiet_NaN();
        cand.rejected = false;
      } else {
        cand.threshold = mcd_critical(p_invalid, p_valid, n, size);
        cand.rejected = cand.mcd_stat > cand.threshold;
      }
      rep.candidate_table.push_back(cand);

      if (cand.rejected) continue;
      if (cand.untestable) {
        if (better(p_valid, cand.mcd_stat, best_untestable)) {
          best_untestable = {p_valid, cand.mcd_stat, true};
          best_u_lambda = lam;
          best_u_start = static_cast<int>(si);
          best_u_alpha = sol.alpha_hat;
        }
        continue;
      }
      for (Index j = 0; j < p; ++j)
        if (sol.alpha_hat[j] == 0.0) never_valid[static_cast<size_t>(j)] = false;
      if (better(p_valid, cand.mcd_stat, best)) {
        best = {p_valid, cand.mcd_stat, true};
        best_lambda = lam;
        best_start = static_cast<int>(si);
        best_alpha = sol.alpha_hat;
      }
    }
    if (cfg.early_exit && best.set) {
      Index remaining = 0;
      for (bool b : never_valid) remaining += b ? 1 : 0;
      if (remaining <= best.p_valid) break;
    }
  }

  if (best.set) {
    rep.chosen_lambda = best_lambda;
    rep.chosen_start = best_start;
    rep.alpha_mcp = best_alpha;
  } else if (best_untestable.set) {
    rep.chosen_lambda = best_u_lambda;
    rep.chosen_start = best_u_start;
    rep.alpha_mcp = best_u_alpha;
    rep.chosen_untestable = true;
  } else {
    rep.all_rejected = true;
    return rep;
  }
  rep.valid_set = zero_pattern(rep.alpha_mcp);
  return rep;
}

}  // namespace wit
