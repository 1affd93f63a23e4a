#pragma once

#include <functional>
#include <string>

#include "wit/types.hpp"

namespace wit {

/// Instrument covariance rule: var on the diagonal, correlation
/// base^(|j-k|^expo) off it; identity covariance when identity is set.
struct ZCovSpec {
  double var = 0.3;
  double corr_base = 0.3;
  double corr_expo = 0.8;
  bool identity = false;

  MatrixXd materialize(Index p) const;
};

struct DGPSpec {
  Index n = 0;
  double beta_star = 1.0;
  VectorXd alpha_star;
  VectorXd gamma_star;
  double sigma_eps = 0.5;
  double corr_eps_eta = 0.6;
  double sigma_eta = 1.0;
  ZCovSpec z_cov;
  std::uint64_t seed = 0;

  Index p() const { return alpha_star.size(); }
  void validate() const;
};

std::pair<IVDataset, TruthLabels> generate(const DGPSpec& spec);

enum class CaseName { C1_I, C1_II, C1_III, C1_IV, C2_I, C2_II, EXAMPLE_1 };

CaseName parse_case_name(const std::string& name);
std::string case_name_string(CaseName c);

/// Materializes the built-in design for a sample size (the high-dimensional
/// cases scale p and sigma_eta with n).
DGPSpec builtin_case(CaseName name, Index n, std::uint64_t seed = 0);

/// One observationally equivalent parameterization (beta*+c, alpha*-c gamma*).
struct EquivalentDGP {
  double c = 0.0;
  double beta_tilde = 0.0;
  VectorXd alpha_tilde;
  IndexSet zero_set;
};

EquivalentDGP transform_dgp(const TruthLabels& truth, double c);

/// All G+1 equivalent parameterizations, one per distinct nonzero ratio
/// alpha*_j/gamma*_j plus the c = 0 entry.  Zero sets partition {1..p}.
std::vector<EquivalentDGP> enumerate_solutions(const TruthLabels& truth);

/// Entry with the largest zero set; ties are an identification failure.
const EquivalentDGP& sparsest_pick(const std::vector<EquivalentDGP>& family);

struct ReplicationOutcome {
  double beta_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<IndexSet> valid_set;  // unset for non-selecting methods
  bool failed = false;
};

struct MetricsReport {
  std::string method;
  double mad = 0.0;
  double std_dev = 0.0;
  double cp = 0.0;
  double fpr = std::numeric_limits<double>::quiet_NaN();
  double fnr = std::numeric_limits<double>::quiet_NaN();
  int n_reps = 0;
  int failures = 0;
};

MetricsReport evaluate(const std::string& method,
                       const std::vector<ReplicationOutcome>& results,
                       const TruthLabels& truth);

struct StudyConfig {
  CaseName case_name = CaseName::C1_I;
  std::vector<Index> n_values;
  int reps = 100;
  std::vector<std::string> methods;  // wit, wit-scad, lasso-baseline, tsls,
                                     // liml, ols, oracle-tsls, oracle-liml
  std::uint64_t seed = 0;
  int workers = 0;  // 0 -> hardware concurrency
};

struct StudyRow {
  std::string case_name;
  Index n = 0;
  MetricsReport metrics;
};

std::vector<std::string> known_methods();

/// Runs reps x methods per n; replication r uses substream (seed, r).
/// Output is identical for any worker count.
std::vector<StudyRow> run_study(const StudyConfig& cfg);

}  // namespace wit
