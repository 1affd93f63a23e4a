#include "wit/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "wit/data.hpp"

namespace wit {

std::vector<VectorXd> selection_starts(const IVDataset& standardized,
                                       const ReducedForm& rf,
                                       double ratio_guard,
                                       double lambda_bar_scale) {
  const Index p = standardized.p();
  std::vector<VectorXd> starts;
  starts.push_back(VectorXd::Zero(p));

  const VectorXd ratios = individual_ratios(rf, ratio_guard);
  std::vector<std::pair<double, Index>> finite;
  for (Index j = 0; j < p; ++j)
    if (std::isfinite(ratios[j])) finite.emplace_back(ratios[j], j);
  if (finite.empty()) return starts;
  std::sort(finite.begin(), finite.end());

  VectorXd sorted(static_cast<Index>(finite.size()));
  for (size_t k = 0; k < finite.size(); ++k)
    sorted[static_cast<Index>(k)] = finite[k].first;

  // MAD scale of the ratios sets the fusing level
  std::vector<double> dev(finite.size());
  const Index m = sorted.size();
  const double med = m % 2 == 1 ? sorted[m / 2]
                                : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  for (Index k = 0; k < m; ++k) dev[static_cast<size_t>(k)] = std::abs(sorted[k] - med);
  std::nth_element(dev.begin(), dev.begin() + dev.size() / 2, dev.end());
  const double mad = dev[dev.size() / 2];
  const double lambda_bar = lambda_bar_scale * std::max(mad, 1e-12);

  for (const Cluster& c : fuzzy_cluster(sorted, lambda_bar)) {
    IndexSet members;
    for (Index pos : c.members) members.push_back(finite[static_cast<size_t>(pos)].second);
    starts.push_back(initial_alpha(c.center, rf, members));
  }
  return starts;
}

WitPipelineResult fit_wit(const IVDataset& ds, const WitOptions& opt) {
  const IVDataset std_ds = ds.standardized ? ds : standardize(ds);
  const ReducedForm rf = reduced_form(std_ds);
  const double shape =
      std::isnan(opt.shape) ? default_shape(opt.penalty) : opt.shape;

  WitPipelineResult out;
  std::vector<VectorXd> starts = selection_starts(
      std_ds, rf, opt.ratio_guard, opt.lambda_bar_scale);
  out.num_starts = static_cast<int>(starts.size());

  out.tuning = tune(std_ds, opt.penalty, shape, starts, opt.tune);

  IndexSet valid;
  if (out.tuning.all_rejected) {
    out.tsls_fallback = true;
    for (Index j = 0; j < std_ds.p(); ++j) valid.push_back(j);
    KClassFit kf = kclass(std_ds, valid, 1.0);
    WITFit fit;
    fit.beta_hat = kf.beta_hat;
    fit.kappa_liml = 1.0;
    fit.valid_set = valid;
    const double var = kclass_classical_variance(std_ds, kf);
    fit.se = std::sqrt(var);
    std::tie(fit.ci_low, fit.ci_high) =
        confidence_interval(fit.beta_hat, var, opt.estimate.ci_level);
    VectorXd alpha_zero = VectorXd::Zero(std_ds.p());
    const SarganResult sg = sargan(std_ds, fit.beta_hat, alpha_zero);
    fit.sargan_stat = sg.statistic;
    fit.sargan_p = sg.p_value;
    fit.sargan_df = sg.df;
    fit.variance_method = VarianceMethod::FixedP;
    out.fit = std::move(fit);
    return out;
  }

  valid = out.tuning.valid_set;
  out.fit = wit_estimate(std_ds, valid, opt.estimate);

  // alpha back to the input instrument scale
  if (std_ds.scaling) {
    const IndexSet invalid = complement(valid, std_ds.p());
    for (size_t k = 0; k < invalid.size(); ++k)
      out.fit.alpha_hat_invalid[static_cast<Index>(k)] *=
          std_ds.scaling->z_scale[invalid[k]];
  }
  return out;
}

double kclass_classical_variance(const IVDataset& ds, const KClassFit& fit) {
  const Index n = ds.n(), p = ds.p();
  const IndexSet invalid = complement(fit.valid_set, p);
  const Index k = static_cast<Index>(invalid.size());
  MatrixXd x(n, 1 + k);
  x.col(0) = ds.d;
  if (k > 0) x.rightCols(k) = select_columns(ds.z, invalid);

  VectorXd theta(1 + k);
  theta[0] = fit.beta_hat;
  theta.tail(k) = fit.alpha_hat_invalid;
  const VectorXd e = ds.y - x * theta;
  const double dof = static_cast<double>(n - 1 - k);
  const double sigma2 = e.squaredNorm() / std::max(dof, 1.0);

  Eigen::HouseholderQR<MatrixXd> qr(ds.z);
  MatrixXd qtx = qr.householderQ().transpose() * x;
  const MatrixXd pzx = qtx.topRows(p).transpose() * qtx.topRows(p);
  const MatrixXd g = x.transpose() * x - fit.kappa * (x.transpose() * x - pzx);
  Eigen::FullPivLU<MatrixXd> lu(g);
  if (!lu.isInvertible())
    throw NumericalError("kclass_classical_variance: singular bracket");
  const MatrixXd ginv = lu.inverse();
  const double v = sigma2 * ginv(0, 0);
  if (!(v > 0.0))
    throw NumericalError("kclass_classical_variance: nonpositive variance");
  return v;
}

}  // namespace wit
