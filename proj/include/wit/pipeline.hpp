#pragma once

#include "wit/estimators.hpp"
#include "wit/tuning.hpp"

namespace wit {

struct WitOptions {
  PenaltyKind penalty = PenaltyKind::MCP;
  double shape = std::numeric_limits<double>::quiet_NaN();  // NaN -> default
  TuneConfig tune;
  WitEstimateOptions estimate;
  double ratio_guard = 1e-8;
  double lambda_bar_scale = 0.5;  // times the MAD of the finite ratios
};

inline double default_shape(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::MCP: return 2.0;
    case PenaltyKind::SCAD: return 3.7;
    case PenaltyKind::Lasso: return 0.0;
  }
  return 0.0;
}

struct WitPipelineResult {
  WITFit fit;
  TuningReport tuning;
  bool tsls_fallback = false;
  int num_starts = 0;
};

/// End-to-end: standardize, cluster the individual estimates into starting
/// points, tune lambda by the MCD test, then LIML on the selected set.
/// Falls back to TSLS with every instrument treated as valid (flagged)
/// when all candidates are rejected.
WitPipelineResult fit_wit(const IVDataset& ds, const WitOptions& opt = {});

/// Multi-start initial points: the zero vector, then one start per cluster
/// of the finite individual ratios, largest cluster first.
std::vector<VectorXd> selection_starts(const IVDataset& standardized,
                                       const ReducedForm& rf,
                                       double ratio_guard,
                                       double lambda_bar_scale);

/// Classical k-class variance sigma2_e * [(X'(I-kappa M_Z)X)^{-1}]_{11}.
double kclass_classical_variance(const IVDataset& ds, const KClassFit& fit);

}  // namespace wit
