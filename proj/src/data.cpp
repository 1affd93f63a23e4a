#include "wit/data.hpp"

#include <cmath>

namespace wit {

void IVDataset::validate() const {
  const Index nn = y.size();
  if (d.size() != nn || z.rows() != nn)
    throw DimensionError("dataset: y, d, z row counts disagree");
  if (z.cols() < 1) throw DimensionError("dataset: need at least one instrument");
  if (nn <= z.cols())
    throw DimensionError("dataset: requires n > p (n=" + std::to_string(nn) +
                         ", p=" + std::to_string(z.cols()) + ")");
  if (!y.allFinite() || !d.allFinite() || !z.allFinite())
    throw ParseError("dataset: non-finite entries");
  if (w && (!w->allFinite() || w->rows() != nn))
    throw DimensionError("dataset: covariate block malformed");
}

IVDataset make_dataset(VectorXd y, VectorXd d, MatrixXd z,
                       std::optional<MatrixXd> w) {
  IVDataset ds;
  ds.y = std::move(y);
  ds.d = std::move(d);
  ds.z = std::move(z);
  ds.w = std::move(w);
  ds.validate();
  return ds;
}

void TruthLabels::validate() const {
  if (alpha_star.size() != gamma_star.size())
    throw DimensionError("truth: alpha and gamma lengths disagree");
  IndexSet zp = zero_pattern(alpha_star);
  if (zp != valid_set)
    throw ConfigError("truth: valid_set must equal the zero pattern of alpha");
  if (valid_set.empty())
    throw ConfigError("truth: order condition needs at least one valid IV");
}

IVDataset standardize(const IVDataset& ds) {
  ds.validate();
  const Index n = ds.n(), p = ds.p();

  IVDataset out;
  Standardization sc;
  sc.y_shift = ds.y.mean();
  sc.d_shift = ds.d.mean();
  out.y = ds.y.array() - sc.y_shift;
  out.d = ds.d.array() - sc.d_shift;
  sc.z_shift.resize(p);
  sc.z_scale.resize(p);
  out.z.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    const double m = ds.z.col(j).mean();
    VectorXd c = ds.z.col(j).array() - m;
    const double ss = c.squaredNorm();
    if (ss <= 1e-12 * static_cast<double>(n))
      throw DegenerateColumnError("standardize: instrument column " +
                                  std::to_string(j + 1) +
                                  " has zero variance");
    const double f = std::sqrt(static_cast<double>(n) / ss);
    out.z.col(j) = c * f;
    sc.z_shift[j] = m;
    sc.z_scale[j] = f;
  }
  // compose with any scaling already applied
  if (ds.scaling) {
    const Standardization& prev = *ds.scaling;
    sc.y_shift += prev.y_shift;
    sc.d_shift += prev.d_shift;
    for (Index j = 0; j < p; ++j) {
      sc.z_shift[j] = prev.z_shift[j] + sc.z_shift[j] / prev.z_scale[j];
      sc.z_scale[j] *= prev.z_scale[j];
    }
  }
  out.w = ds.w;
  out.standardized = true;
  out.scaling = std::move(sc);
  return out;
}

IVDataset partial_out(const IVDataset& ds) {
  ds.validate();
  if (!ds.w) throw ConfigError("partial_out: dataset has no covariates");
  const Index n = ds.n(), q = ds.w->cols();

  MatrixXd x(n, q + 1);
  x.col(0).setOnes();
  x.rightCols(q) = *ds.w;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols())
    throw CollinearityError("partial_out: covariate block is rank deficient");

  auto resid = [&](const VectorXd& v) -> VectorXd {
    return v - x * qr.solve(v);
  };

  IVDataset out;
  out.y = resid(ds.y);
  out.d = resid(ds.d);
  out.z.resize(n, ds.p());
  for (Index j = 0; j < ds.p(); ++j) out.z.col(j) = resid(ds.z.col(j));
  out.standardized = false;
  return out;
}

ReducedForm reduced_form(const IVDataset& ds) {
  ds.validate();
  const Index n = ds.n();
  ReducedForm rf;
  rf.gram = ds.z.transpose() * ds.z / static_cast<double>(n);
  Eigen::LDLT<MatrixXd> ldlt(rf.gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff())
    throw RankError("reduced_form: singular instrument gram matrix");
  rf.gamma_hat = ldlt.solve(ds.z.transpose() * ds.d / static_cast<double>(n));
  rf.Gamma_hat = ldlt.solve(ds.z.transpose() * ds.y / static_cast<double>(n));
  return rf;
}

}  // namespace wit
