#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wit {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

/// Base error; `usage()` distinguishes config/schema problems (CLI exit 2)
/// from numerical failures (CLI exit 1).
class Error : public std::runtime_error {
 public:
  Error(std::string msg, bool usage = false)
      : std::runtime_error(std::move(msg)), usage_(usage) {}
  bool usage() const { return usage_; }

 private:
  bool usage_;
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& m) : Error(m, true) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(m, true) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error(m, true) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(m, true) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& m) : Error(m, false) {}
};
struct DegenerateColumnError : NumericalError {
  explicit DegenerateColumnError(const std::string& m) : NumericalError(m) {}
};
struct CollinearityError : NumericalError {
  explicit CollinearityError(const std::string& m) : NumericalError(m) {}
};
struct RankError : NumericalError {
  explicit RankError(const std::string& m) : NumericalError(m) {}
};
struct NoFirstStageError : NumericalError {
  explicit NoFirstStageError(const std::string& m) : NumericalError(m) {}
};
struct EnumerationError : Error {
  explicit EnumerationError(const std::string& m) : Error(m, true) {}
};
struct IdentificationError : NumericalError {
  explicit IdentificationError(const std::string& m) : NumericalError(m) {}
};

/// Column transforms recorded by standardize() so reports can be mapped
/// back to the input scale.  z_std = (z - shift) * scale.
struct Standardization {
  double y_shift = 0.0;
  double d_shift = 0.0;
  VectorXd z_shift;  // p
  VectorXd z_scale;  // p
};

/// Outcome, treatment and candidate instruments (plus optional exogenous
/// covariates before partialling).  Immutable after construction.
struct IVDataset {
  VectorXd y;
  VectorXd d;
  MatrixXd z;
  std::optional<MatrixXd> w;
  bool standardized = false;
  std::optional<Standardization> scaling;

  Index n() const { return y.size(); }
  Index p() const { return z.cols(); }

  /// Enforces n > p >= 1, matching shapes and finite entries.
  void validate() const;
};

IVDataset make_dataset(VectorXd y, VectorXd d, MatrixXd z,
                       std::optional<MatrixXd> w = std::nullopt);

/// First-stage / reduced-form OLS coefficients and the average gram matrix.
struct ReducedForm {
  VectorXd gamma_hat;  // Z -> D
  VectorXd Gamma_hat;  // Z -> Y
  MatrixXd gram;       // Z'Z / n
};

/// Simulation ground truth.
struct TruthLabels {
  double beta_star = 0.0;
  VectorXd alpha_star;
  VectorXd gamma_star;
  IndexSet valid_set;  // exactly the zero pattern of alpha_star

  void validate() const;
};

inline IndexSet zero_pattern(const VectorXd& v, double tol = 0.0) {
  IndexSet out;
  for (Index j = 0; j < v.size(); ++j)
    if (std::abs(v[j]) <= tol) out.push_back(j);
  return out;
}

inline IndexSet complement(const IndexSet& s, Index p) {
  std::vector<bool> in(static_cast<size_t>(p), false);
  for (Index j : s) in[static_cast<size_t>(j)] = true;
  IndexSet out;
  for (Index j = 0; j < p; ++j)
    if (!in[static_cast<size_t>(j)]) out.push_back(j);
  return out;
}

inline MatrixXd select_columns(const MatrixXd& m, const IndexSet& idx) {
  MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}

}  // namespace wit
