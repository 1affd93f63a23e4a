#include "wit/estimators.hpp"

#include <cmath>

#include "wit/distributions.hpp"
#include "wit/tuning.hpp"

namespace wit {

namespace {

Eigen::Matrix2d sym2(const Eigen::Matrix2d& m) {
  Eigen::Matrix2d s = 0.5 * (m + m.transpose());
  return s;
}

}  // namespace

IVQuadForms iv_quad_forms(const IVDataset& ds, const IndexSet& valid_set) {
  ds.validate();
  const Index n = ds.n(), p = ds.p();
  for (Index j : valid_set)
    if (j < 0 || j >= p) throw DimensionError("valid_set index out of range");

  MatrixXd w(n, 2);
  w.col(0) = ds.y;
  w.col(1) = ds.d;

  IVQuadForms q;
  q.n = n;
  q.p = p;

  Eigen::HouseholderQR<MatrixXd> qr(ds.z);
  MatrixXd qtw = qr.householderQ().transpose() * w;
  q.A = sym2(w.transpose() * w - qtw.topRows(p).transpose() * qtw.topRows(p));

  const IndexSet invalid = complement(valid_set, p);
  q.p_invalid = static_cast<Index>(invalid.size());
  if (invalid.empty()) {
    q.B = sym2(w.transpose() * w);
  } else {
    MatrixXd zc = select_columns(ds.z, invalid);
    Eigen::HouseholderQR<MatrixXd> qrc(zc);
    MatrixXd qtwc = qrc.householderQ().transpose() * w;
    const Index k = zc.cols();
    q.B = sym2(w.transpose() * w -
               qtwc.topRows(k).transpose() * qtwc.topRows(k));
  }
  return q;
}

std::pair<double, double> eig2x2_pencil(const Eigen::Matrix2d& A,
                                        const Eigen::Matrix2d& B) {
  // normalize for conditioning; eigenvalues of A^{-1}B are scale invariant
  const double s = std::max(std::abs(A(0, 0)) + std::abs(A(1, 1)), 1e-300);
  const Eigen::Matrix2d a = A / s, b = B / s;
  const double det_a = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double det_b = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
  const double mix =
      a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - a(0, 1) * b(1, 0) - a(1, 0) * b(0, 1);
  if (std::abs(det_a) < 1e-14 * std::max(1.0, std::abs(mix)))
    throw NumericalError("eig2x2_pencil: degenerate 2x2 pencil");
  double disc = mix * mix - 4.0 * det_a * det_b;
  if (disc < 0.0) {
    if (disc < -1e-12) throw NumericalError("eig2x2_pencil: complex pencil");
    disc = 0.0;
  }
  const double r = std::sqrt(disc);
  double m1 = (mix - r) / (2.0 * det_a);
  double m2 = (mix + r) / (2.0 * det_a);
  if (m1 > m2) std::swap(m1, m2);
  return {m1, m2};
}

VectorXd ols(const VectorXd& y, const MatrixXd& x) {
  if (x.rows() != y.size()) throw DimensionError("ols: dimension mismatch");
  const MatrixXd g = x.transpose() * x;
  Eigen::LDLT<MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff()))
    throw RankError("ols: rank-deficient design");
  return ldlt.solve(x.transpose() * y);
}

KClassFit kclass(const IVDataset& ds, const IndexSet& valid_set,
                 double kappa) {
  ds.validate();
  const Index n = ds.n(), p = ds.p();
  const IndexSet invalid = complement(valid_set, p);
  const Index k = static_cast<Index>(invalid.size());

  MatrixXd x(n, 1 + k);
  x.col(0) = ds.d;
  if (k > 0) x.rightCols(k) = select_columns(ds.z, invalid);

  Eigen::HouseholderQR<MatrixXd> qr(ds.z);
  auto mz = [&](const MatrixXd& m) -> MatrixXd {
    MatrixXd qtm = qr.householderQ().transpose() * m;
    qtm.topRows(p).setZero();
    return qr.householderQ() * qtm;
  };
  const MatrixXd mzx = mz(x);
  const VectorXd mzy = mz(ds.y);

  const MatrixXd g =
      x.transpose() * x - kappa * (mzx.transpose() * mzx);
  const VectorXd rhs = x.transpose() * ds.y - kappa * (mzx.transpose() * mzy);
  Eigen::FullPivLU<MatrixXd> lu(g);
  if (!lu.isInvertible())
    throw NumericalError("kclass: singular normal matrix at kappa=" +
                         std::to_string(kappa));
  const VectorXd theta = lu.solve(rhs);

  KClassFit fit;
  fit.beta_hat = theta[0];
  fit.alpha_hat_invalid = theta.tail(k);
  fit.kappa = kappa;
  fit.valid_set = valid_set;
  return fit;
}

double liml_kappa(const IVQuadForms& q) {
  auto [lo, hi] = eig2x2_pencil(q.A, q.B);
  (void)hi;
  if (lo < 1.0 - 1e-6)
    throw NumericalError("liml_kappa: eigenvalue below 1, pencil invalid");
  return std::max(lo, 1.0);
}

double liml_kappa(const IVDataset& ds, const IndexSet& valid_set) {
  return liml_kappa(iv_quad_forms(ds, valid_set));
}

SpectralStats spectral_stats(const IVQuadForms& q, double beta_hat) {
  const double n = static_cast<double>(q.n);
  const Index p_valid = q.p - q.p_invalid;
  SpectralStats st;
  st.S = q.A / static_cast<double>(q.n - q.p);
  st.T = (q.B - q.A) / n;
  auto [lo, hi] = eig2x2_pencil(st.S, st.T);
  st.m_min = lo;
  st.m_max = hi;
  st.mu_hat = std::max(hi - static_cast<double>(p_valid) / n, 0.0);

  Eigen::Vector2d a_vec(beta_hat, 1.0);
  Eigen::FullPivLU<Eigen::Matrix2d> lu(st.S);
  if (!lu.isInvertible())
    throw NumericalError("spectral_stats: singular S matrix");
  const double as_a = a_vec.dot(lu.solve(a_vec));
  const double denom = n - static_cast<double>(q.p_invalid);
  st.omega_hat =
      (static_cast<double>(q.n - q.p) / denom) * st.S +
      (n / denom) *
          (st.T - (st.mu_hat / as_a) * (a_vec * a_vec.transpose()));
  st.omega_hat = sym2(st.omega_hat);
  return st;
}

SpectralStats spectral_stats(const IVDataset& ds, const IndexSet& valid_set,
                             double beta_hat) {
  return spectral_stats(iv_quad_forms(ds, valid_set), beta_hat);
}

double wit_variance(const SpectralStats& stats, const KClassFit& fit, Index n,
                    Index p_valid, Index p_invalid, VarianceMethod method) {
  const double nn = static_cast<double>(n);
  const Eigen::Vector2d b_vec(1.0, -fit.beta_hat);
  const Eigen::Vector2d a_vec(fit.beta_hat, 1.0);

  if (method == VarianceMethod::FixedP) {
    const double sigma_eps2 = b_vec.dot(stats.S * b_vec);
    const double concentration =
        stats.T(1, 1) - (static_cast<double>(p_valid) / nn) * stats.S(1, 1);
    if (!(concentration > 0.0) || !(sigma_eps2 > 0.0))
      throw NumericalError("wit_variance: degenerate fixed-p concentration");
    return sigma_eps2 / (nn * concentration);
  }

  if (!(stats.mu_hat > 0.0))
    throw NumericalError("wit_variance: mu_hat = 0, many-IV formula degenerate");
  const double b_ob = b_vec.dot(stats.omega_hat * b_vec);
  const double q_s = b_vec.dot(stats.T * b_vec) / b_ob;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(stats.omega_hat);
  if (!lu.isInvertible())
    throw NumericalError("wit_variance: singular omega_hat");
  const double a_oinv_a = a_vec.dot(lu.solve(a_vec));
  const double c_hat =
      static_cast<double>(p_valid) / (nn - static_cast<double>(p_invalid));
  const double bracket = q_s * stats.omega_hat(1, 1) - stats.T(1, 1) +
                         (c_hat / (1.0 - c_hat)) * q_s / a_oinv_a;
  const double pref =
      b_ob * (stats.mu_hat + static_cast<double>(p_valid) / nn) /
      (-stats.mu_hat);
  const double var_asym = pref / bracket;
  if (!(var_asym > 0.0))
    throw NumericalError(
        "wit_variance: nonpositive many-IV variance (mu_hat=" +
        std::to_string(stats.mu_hat) + ", bracket=" + std::to_string(bracket) +
        ", pref=" + std::to_string(pref) + ")");
  return var_asym / nn;
}

std::pair<double, double> confidence_interval(double beta_hat, double variance,
                                              double level) {
  if (!(variance > 0.0))
    throw ConfigError("confidence_interval: variance must be positive");
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("confidence_interval: level must be in (0,1)");
  const double zq = normal_quantile(0.5 * (1.0 + level));
  const double half = zq * std::sqrt(variance);
  return {beta_hat - half, beta_hat + half};
}

WITFit wit_estimate(const IVDataset& ds, const IndexSet& valid_set,
                    const WitEstimateOptions& opt) {
  if (valid_set.empty())
    throw ConfigError("wit_estimate: valid set must be nonempty");
  const IVQuadForms q = iv_quad_forms(ds, valid_set);
  const Index n = q.n, p = q.p;
  const Index p_valid = static_cast<Index>(valid_set.size());
  const Index p_invalid = q.p_invalid;

  WITFit fit;
  fit.valid_set = valid_set;

  // exact (noise-free) systems: any kappa solves the equations
  const double scale_b = q.B.trace();
  const bool degenerate = q.A.trace() <= 1e-12 * std::max(scale_b, 1e-300);
  fit.noise_degenerate = degenerate;
  fit.kappa_liml = degenerate ? 1.0 : liml_kappa(q);

  const KClassFit kfit = kclass(ds, valid_set, fit.kappa_liml);
  fit.beta_hat = kfit.beta_hat;
  fit.alpha_hat_invalid = kfit.alpha_hat_invalid;

  VectorXd alpha_full = VectorXd::Zero(p);
  {
    const IndexSet invalid = complement(valid_set, p);
    for (size_t k = 0; k < invalid.size(); ++k)
      alpha_full[invalid[k]] = kfit.alpha_hat_invalid[static_cast<Index>(k)];
  }
  const SarganResult sg = sargan(ds, fit.beta_hat, alpha_full);
  fit.sargan_stat = sg.statistic;
  fit.sargan_p = sg.p_value;
  fit.sargan_df = sg.df;

  if (degenerate) {
    fit.se = 0.0;
    fit.ci_low = fit.ci_high = fit.beta_hat;
    fit.mu_hat = 0.0;
    fit.variance_method = VarianceMethod::FixedP;
    return fit;
  }

  const SpectralStats st = spectral_stats(q, fit.beta_hat);
  fit.mu_hat = st.mu_hat;

  VarianceMethod method =
      opt.variance_method
          ? *opt.variance_method
          : (static_cast<double>(p) / static_cast<double>(n) <
                     opt.manyiv_p_fraction
                 ? VarianceMethod::FixedP
                 : VarianceMethod::ManyIV_Bekker);
  double var;
  try {
    var = wit_variance(st, kfit, n, p_valid, p_invalid, method);
  } catch (const NumericalError&) {
    if (method == VarianceMethod::ManyIV_Bekker) {
      method = VarianceMethod::FixedP;
      fit.variance_fallback = true;
      var = wit_variance(st, kfit, n, p_valid, p_invalid, method);
    } else {
      throw;
    }
  }
  fit.variance_method = method;
  fit.se = std::sqrt(var);
  std::tie(fit.ci_low, fit.ci_high) =
      confidence_interval(fit.beta_hat, var, opt.ci_level);
  return fit;
}

}  // namespace wit
