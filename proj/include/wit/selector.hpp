#pragma once

#include "wit/penalty.hpp"
#include "wit/types.hpp"

namespace wit {

/// Annihilator-transformed design for the selection problem.
/// z_tilde = M_{D_hat} Z with D_hat = P_Z D; rank p-1 since z_tilde*gamma_hat = 0.
struct TransformedDesign {
  MatrixXd z_tilde;
  VectorXd d_hat;
  VectorXd gamma_hat;
  double phi = 0.0;  // >= largest eigenvalue of z_tilde' z_tilde
};

struct SolverConfig {
  double delta_c = 1e-3;  // contraction-stage tolerance
  double delta_t = 1e-5;  // tightening-stage tolerance
  int max_outer = 100;
  int max_inner = 5000;
  bool track_objective = false;

  void validate() const {
    if (!(delta_t <= delta_c))
      throw ConfigError("solver: delta_t must be <= delta_c");
    if (delta_t <= 0.0 || max_outer < 1 || max_inner < 1)
      throw ConfigError("solver: bad tolerances or iteration caps");
  }
};

struct LocalSolution {
  VectorXd alpha_hat;
  double kkt_residual = 0.0;
  int outer_iters = 0;
  int inner_iters = 0;
  bool converged = false;
  double lambda = 0.0;
  double shape = 0.0;
  std::vector<double> inner_objective;  // filled when track_objective
};

TransformedDesign build_transformed_design(const IVDataset& ds);

/// Component-wise Gamma_hat_j / gamma_hat_j; entries with |gamma_hat_j|
/// below the guard come back as NaN instead of huge values.
VectorXd individual_ratios(const ReducedForm& rf, double guard = 1e-8);

struct Cluster {
  double center = 0.0;
  std::vector<Index> members;  // positions into the sorted input
  Index size() const { return static_cast<Index>(members.size()); }
};

/// Fused-MCP clustering of sorted individual estimates: one I-LAMM pass on
/// the consecutive-difference parameterization, clusters ordered by
/// descending size.
std::vector<Cluster> fuzzy_cluster(const VectorXd& beta_sorted,
                                   double lambda_bar);

/// alpha^(0) = Gamma_hat - beta_check * gamma_hat, zeroed on cluster members.
VectorXd initial_alpha(double check_beta, const ReducedForm& rf,
                       const IndexSet& cluster_members);

/// I-LAMM: outer local linear approximation re-weighting, inner ISTA with
/// step 1/phi on the (1/2n)||y - Zt a||^2 loss.  `penalty_scale` (empty =
/// ones) anchors the penalty to the original per-column coefficient scale:
/// effective per-column penalty p_lambda(f_j * t) for scale factor f_j.
LocalSolution ilamm_solve(const TransformedDesign& td, const VectorXd& y,
                          const PenaltySpec& spec, const VectorXd& alpha0,
                          const SolverConfig& cfg,
                          const VectorXd& penalty_scale = VectorXd());

/// Self-consistent KKT suboptimality: min over subgradients of
/// ||-Zt'(y - Zt a)/n + w .* xi||_inf with w_j = p'(|a_j|).
double kkt_violation(const TransformedDesign& td, const VectorXd& y,
                     const PenaltySpec& spec, const VectorXd& alpha,
                     const VectorXd& penalty_scale = VectorXd());

}  // namespace wit
