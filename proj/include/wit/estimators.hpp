#pragma once

#include "wit/types.hpp"

namespace wit {

enum class VarianceMethod { ManyIV_Bekker, FixedP };

inline const char* variance_method_name(VarianceMethod m) {
  return m == VarianceMethod::ManyIV_Bekker ? "many_iv_bekker" : "fixed_p";
}

/// Joint (beta, alpha on the declared-invalid block) k-class fit.
/// kappa = 0 reproduces OLS, kappa = 1 reproduces TSLS.
struct KClassFit {
  double beta_hat = 0.0;
  VectorXd alpha_hat_invalid;
  double kappa = 0.0;
  IndexSet valid_set;
};

/// S, T and derived spectral quantities of the 2x2 reduced-form system.
struct SpectralStats {
  Eigen::Matrix2d S;
  Eigen::Matrix2d T;
  double m_min = 0.0;
  double m_max = 0.0;
  double mu_hat = 0.0;  // max(m_max - p_valid/n, 0)
  Eigen::Matrix2d omega_hat;
};

struct WITFit {
  double beta_hat = 0.0;
  double kappa_liml = 1.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  VectorXd alpha_hat_invalid;
  IndexSet valid_set;
  double mu_hat = 0.0;
  double sargan_stat = 0.0;
  double sargan_p = 0.0;  // NaN when just identified
  int sargan_df = 0;
  VarianceMethod variance_method = VarianceMethod::FixedP;
  bool variance_fallback = false;  // many-IV formula degenerate, fell back
  bool noise_degenerate = false;   // residual variation ~ 0 (exact system)
};

/// Quadratic forms A = (Y,D)' M_Z (Y,D) and B = (Y,D)' M_{Z_inv} (Y,D);
/// every k-class / LIML / MCD quantity is a function of these.
struct IVQuadForms {
  Eigen::Matrix2d A;
  Eigen::Matrix2d B;
  Index n = 0;
  Index p = 0;
  Index p_invalid = 0;
};

IVQuadForms iv_quad_forms(const IVDataset& ds, const IndexSet& valid_set);

/// Generalized eigenvalues of the pencil (A, B): roots m of det(B - mA)=0,
/// returned as {min, max}.  Discriminant clamped at -1e-12 -> 0.
std::pair<double, double> eig2x2_pencil(const Eigen::Matrix2d& A,
                                        const Eigen::Matrix2d& B);

/// Normal-equation least squares.
VectorXd ols(const VectorXd& y, const MatrixXd& x);

KClassFit kclass(const IVDataset& ds, const IndexSet& valid_set, double kappa);

double liml_kappa(const IVDataset& ds, const IndexSet& valid_set);
double liml_kappa(const IVQuadForms& q);

SpectralStats spectral_stats(const IVDataset& ds, const IndexSet& valid_set,
                             double beta_hat);
SpectralStats spectral_stats(const IVQuadForms& q, double beta_hat);

/// Variance of beta_hat (already on the 1/n finite-sample scale).
double wit_variance(const SpectralStats& stats, const KClassFit& fit, Index n,
                    Index p_valid, Index p_invalid, VarianceMethod method);

std::pair<double, double> confidence_interval(double beta_hat, double variance,
                                              double level);

struct WitEstimateOptions {
  std::optional<VarianceMethod> variance_method;  // unset -> p/n rule
  double ci_level = 0.95;
  double manyiv_p_fraction = 0.05;  // FixedP below this p/n
};

/// LIML on the specification with Z[valid^c] as included regressors,
/// plus spectral statistics, standard error, CI and Sargan diagnostic.
WITFit wit_estimate(const IVDataset& ds, const IndexSet& valid_set,
                    const WitEstimateOptions& opt = {});

}  // namespace wit
