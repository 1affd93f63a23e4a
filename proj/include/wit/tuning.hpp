#pragma once

#include "wit/estimators.hpp"
#include "wit/penalty.hpp"
#include "wit/selector.hpp"
#include "wit/types.hpp"

namespace wit {

struct LambdaGrid {
  std::vector<double> values;  // strictly increasing, length 20
  bool degenerate_p1 = false;  // p = 1 fallback scale used
};

/// 0.1..2.0 times sqrt(log p / n); falls back to sqrt(log 2 / n) at p = 1.
LambdaGrid lambda_grid(Index n, Index p);

struct McdResult {
  double statistic = 0.0;  // n * m_min
  double threshold = 0.0;
  bool rejected = false;
  Index p_valid = 0;
  Index p_invalid = 0;
  double size_used = 0.0;
};

/// Modified Cragg-Donald statistic pieces for a candidate valid set:
/// m_min plus the S and T matrices it derives from.
struct McdStatistic {
  double m_min = 0.0;
  Eigen::Matrix2d S;
  Eigen::Matrix2d T;
};

McdStatistic mcd_statistic(const IVDataset& ds, const IndexSet& valid_set);

/// Critical value: chi-square quantile with df = p_valid - 1 at the
/// size-adjusted level 1 - Phi(sqrt((n-p_invalid)/(n-p_invalid-p_valid)) *
/// PhiInv(size)).  Throws when df <= 0 (just-identified candidate).
double mcd_critical(Index p_invalid, Index p_valid, Index n, double size);

struct SarganResult {
  double statistic = 0.0;
  double p_value = 0.0;  // NaN when just identified
  int df = 0;
};

SarganResult sargan(const IVDataset& ds, double beta_hat,
                    const VectorXd& alpha_hat);

/// Scaled test size 0.5/log(n), clamped to (0.001, 0.2).
double default_mcd_size(Index n);

struct TuneConfig {
  SolverConfig solver;
  double size = std::numeric_limits<double>::quiet_NaN();  // NaN -> default
  double grid_scale = 1.0;
  bool early_exit = true;
};

struct TuneCandidate {
  int start_id = 0;
  double lambda = 0.0;
  Index p_valid = 0;
  double mcd_stat = 0.0;
  double threshold = 0.0;
  bool rejected = false;
  bool untestable = false;  // p_valid <= 1: no overidentifying restriction
};

struct TuningReport {
  double chosen_lambda = std::numeric_limits<double>::quiet_NaN();
  int chosen_start = -1;
  VectorXd alpha_mcp;   // empty when all candidates rejected
  IndexSet valid_set;   // zero pattern of alpha_mcp
  bool all_rejected = false;
  bool chosen_untestable = false;
  double size_used = 0.0;
  std::vector<TuneCandidate> candidate_table;
};

/// Algorithm: loop starts (zero start first, then largest cluster first)
/// x the lambda grid; solve each; keep the non-rejected candidate with the
/// largest valid set (ties: smaller MCD statistic); early-exit when no
/// sparser candidate can still win.
TuningReport tune(const IVDataset& ds, PenaltyKind kind, double shape,
                  const std::vector<VectorXd>& starts, const TuneConfig& cfg);

}  // namespace wit
