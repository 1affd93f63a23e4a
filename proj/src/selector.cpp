#include "wit/selector.hpp"

#include <algorithm>
#include <cmath>

#include "wit/data.hpp"

namespace wit {

namespace {

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_lambda_max(const MatrixXd& g, double tol = 1e-8,
                        int max_iter = 1000) {
  const Index p = g.rows();
  VectorXd v = VectorXd::Ones(p);
  for (Index j = 0; j < p; ++j) v[j] += 1e-3 * static_cast<double>(j) / (p + 1.0);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    VectorXd gv = g * v;
    const double nl = gv.norm();
    if (nl == 0.0) return 0.0;
    gv /= nl;
    const double est = gv.dot(g * gv);
    if (std::abs(est - lam) <= tol * std::max(1.0, std::abs(est))) {
      lam = est;
      break;
    }
    lam = est;
    v.swap(gv);
  }
  return lam;
}

// Per-column LLA weight: derivative of the scale-anchored penalty at |t|.
inline double lla_weight(const PenaltySpec& spec, double t, double f) {
  return f * penalty_derivative(spec, f * std::abs(t));
}

// omega_w(a) = min over subgradients given fixed per-column weights w.
double omega_weighted(const MatrixXd& zt, const VectorXd& y, const VectorXd& a,
                      const VectorXd& w, double n) {
  const VectorXd g = zt.transpose() * (y - zt * a) / n;
  double om = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    const double v = a[j] != 0.0
                         ? std::abs(g[j] - w[j] * (a[j] > 0.0 ? 1.0 : -1.0))
                         : std::max(std::abs(g[j]) - w[j], 0.0);
    om = std::max(om, v);
  }
  return om;
}

}  // namespace

TransformedDesign build_transformed_design(const IVDataset& ds) {
  ds.validate();
  const ReducedForm rf = reduced_form(ds);
  TransformedDesign td;
  td.gamma_hat = rf.gamma_hat;
  td.d_hat = ds.z * rf.gamma_hat;
  const double dd = td.d_hat.squaredNorm();
  if (dd <= 1e-12 * static_cast<double>(ds.n()))
    throw NoFirstStageError(
        "build_transformed_design: treatment is orthogonal to the instruments");
  td.z_tilde = ds.z - td.d_hat * (td.d_hat.transpose() * ds.z) / dd;
  const MatrixXd g = td.z_tilde.transpose() * td.z_tilde;
  // small inflation keeps phi an upper bound despite iteration tolerance
  td.phi = power_lambda_max(g) * (1.0 + 1e-6);
  return td;
}

VectorXd individual_ratios(const ReducedForm& rf, double guard) {
  VectorXd out(rf.gamma_hat.size());
  for (Index j = 0; j < out.size(); ++j)
    out[j] = std::abs(rf.gamma_hat[j]) < guard
                 ? std::numeric_limits<double>::quiet_NaN()
                 : rf.Gamma_hat[j] / rf.gamma_hat[j];
  return out;
}

std::vector<Cluster> fuzzy_cluster(const VectorXd& beta_sorted,
                                   double lambda_bar) {
  const Index p = beta_sorted.size();
  if (p == 0) return {};
  for (Index j = 1; j < p; ++j)
    if (beta_sorted[j] < beta_sorted[j - 1])
      throw ConfigError("fuzzy_cluster: input must be sorted ascending");
  if (p == 1) return {Cluster{beta_sorted[0], {0}}};

  // theta_1 = level, theta_j = consecutive differences; design L = lower ones
  VectorXd theta(p);
  theta[0] = beta_sorted[0];
  for (Index j = 1; j < p; ++j) theta[j] = beta_sorted[j] - beta_sorted[j - 1];

  // phi = lambda_max(L'L); closed form 1/(2(1-cos(pi(2k-1)/(2p+1)))) max
  const double phi =
      1.0 / (2.0 * (1.0 - std::cos(M_PI * (2.0 * p - 1.0) / (2.0 * p + 1.0))));
  const PenaltySpec pen = mcp(lambda_bar, 2.0);

  auto cum = [&](const VectorXd& t) {  // L * theta
    VectorXd b(p);
    double s = 0.0;
    for (Index j = 0; j < p; ++j) {
      s += t[j];
      b[j] = s;
    }
    return b;
  };
  auto cumT = [&](const VectorXd& r) {  // L' * r
    VectorXd g(p);
    double s = 0.0;
    for (Index j = p - 1; j >= 0; --j) {
      s += r[j];
      g[j] = s;
    }
    return g;
  };

  // single I-LAMM pass: contraction + one tightening on the differences
  const int outer_passes = lambda_bar > 0.0 ? 8 : 1;
  for (int t = 0; t < outer_passes; ++t) {
    VectorXd w(p);
    w[0] = 0.0;  // level is unpenalized
    for (Index j = 1; j < p; ++j)
      w[j] = penalty_derivative(pen, std::abs(theta[j]));
    for (int k = 0; k < 3000; ++k) {
      const VectorXd r = beta_sorted - cum(theta);
      const VectorXd step = theta + cumT(r) / phi;
      VectorXd tn(p);
      tn[0] = step[0];
      for (Index j = 1; j < p; ++j) {
        const double m = std::abs(step[j]) - w[j] / phi;
        tn[j] = m > 0.0 ? (step[j] > 0.0 ? m : -m) : 0.0;
      }
      const double diff = (tn - theta).lpNorm<Eigen::Infinity>();
      theta = tn;
      if (diff < 1e-9) break;
    }
  }

  std::vector<Cluster> clusters;
  Index start = 0;
  VectorXd fitted = cum(theta);
  for (Index j = 1; j <= p; ++j) {
    if (j == p || theta[j] != 0.0) {
      Cluster c;
      double sum = 0.0;
      for (Index i = start; i < j; ++i) {
        c.members.push_back(i);
        sum += beta_sorted[i];
      }
      c.center = sum / static_cast<double>(j - start);
      clusters.push_back(std::move(c));
      start = j;
    }
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const Cluster& a, const Cluster& b) {
                     if (a.members.size() != b.members.size())
                       return a.members.size() > b.members.size();
                     return a.center < b.center;
                   });
  return clusters;
}

VectorXd initial_alpha(double check_beta, const ReducedForm& rf,
                       const IndexSet& cluster_members) {
  if (!std::isfinite(check_beta))
    throw ConfigError("initial_alpha: check_beta must be finite");
  VectorXd a = rf.Gamma_hat - check_beta * rf.gamma_hat;
  for (Index j : cluster_members) a[j] = 0.0;
  return a;
}

LocalSolution ilamm_solve(const TransformedDesign& td, const VectorXd& y,
                          const PenaltySpec& spec, const VectorXd& alpha0,
                          const SolverConfig& cfg,
                          const VectorXd& penalty_scale) {
  spec.validate();
  cfg.validate();
  const MatrixXd& zt = td.z_tilde;
  const Index p = zt.cols();
  if (y.size() != zt.rows() || alpha0.size() != p)
    throw DimensionError("ilamm_solve: dimension mismatch");
  VectorXd fs = penalty_scale.size() == 0 ? VectorXd::Ones(p) : penalty_scale;
  if (fs.size() != p) throw DimensionError("ilamm_solve: bad penalty_scale");
  const double n = static_cast<double>(zt.rows());
  const double phi = td.phi;

  LocalSolution sol;
  sol.lambda = spec.lambda;
  sol.shape = spec.shape;

  VectorXd a = alpha0;
  VectorXd a_prev = a;
  int inner_total = 0;
  int t = 0;
  for (; t < cfg.max_outer; ++t) {
    VectorXd w(p);
    for (Index j = 0; j < p; ++j) w[j] = lla_weight(spec, a[j], fs[j]);
    const double tol = t == 0 ? cfg.delta_c : cfg.delta_t;
    VectorXd r = y - zt * a;
    VectorXd g = zt.transpose() * r / n;
    for (int k = 0; k < cfg.max_inner; ++k) {
      if (cfg.track_objective) {
        double obj = 0.5 * r.squaredNorm() / n;
        for (Index j = 0; j < p; ++j) obj += w[j] * std::abs(a[j]);
        sol.inner_objective.push_back(obj);
      }
      VectorXd step = a + g * (n / phi);
      for (Index j = 0; j < p; ++j) {
        const double thr = w[j] * (n / phi);
        const double m = std::abs(step[j]) - thr;
        a[j] = m > 0.0 ? (step[j] > 0.0 ? m : -m) : 0.0;
      }
      ++inner_total;
      r.noalias() = y - zt * a;
      g.noalias() = zt.transpose() * r / n;
      double om = 0.0;
      for (Index j = 0; j < p; ++j) {
        const double v = a[j] != 0.0
                             ? std::abs(g[j] - w[j] * (a[j] > 0.0 ? 1.0 : -1.0))
                             : std::max(std::abs(g[j]) - w[j], 0.0);
        om = std::max(om, v);
      }
      if (om <= tol) break;
    }
    const double move = (a - a_prev).lpNorm<Eigen::Infinity>();
    a_prev = a;
    if (t > 0 && move <= cfg.delta_t) {
      // outer iterates settled; confirm against self-consistent weights
      VectorXd ws(p);
      for (Index j = 0; j < p; ++j) ws[j] = lla_weight(spec, a[j], fs[j]);
      if (omega_weighted(zt, y, a, ws, n) <= cfg.delta_t) {
        ++t;
        break;
      }
    }
  }

  sol.alpha_hat = a;
  sol.outer_iters = t;
  sol.inner_iters = inner_total;
  sol.kkt_residual = kkt_violation(td, y, spec, a, fs);
  sol.converged = sol.kkt_residual <= cfg.delta_t;
  return sol;
}

double kkt_violation(const TransformedDesign& td, const VectorXd& y,
                     const PenaltySpec& spec, const VectorXd& alpha,
                     const VectorXd& penalty_scale) {
  const Index p = td.z_tilde.cols();
  if (alpha.size() != p || y.size() != td.z_tilde.rows())
    throw DimensionError("kkt_violation: dimension mismatch");
  VectorXd fs = penalty_scale.size() == 0 ? VectorXd::Ones(p) : penalty_scale;
  VectorXd w(p);
  for (Index j = 0; j < p; ++j) w[j] = lla_weight(spec, alpha[j], fs[j]);
  return omega_weighted(td.z_tilde, y, alpha, w,
                        static_cast<double>(td.z_tilde.rows()));
}

}  // namespace wit
