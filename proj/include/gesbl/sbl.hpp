#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gesbl/arx_model.hpp"
#include "gesbl/regression.hpp"

namespace gesbl {

/// Combined uses both element (beta) and group (gamma) variances; the other
/// two recover classic element-wise SBL and group SBL.
enum class PriorMode { Combined, ElementOnly, GroupOnly };

/// Prior hyperparameters of one regression problem.
///
/// The effective prior variance of coefficient q in group r is
///   Combined:    beta_q * gamma_r / (beta_q + gamma_r)
///   ElementOnly: beta_q
///   GroupOnly:   gamma_r
/// and is exactly zero for pruned entries. Pruned entries keep their flag;
/// their hyperparameter is stored as 0 and never used as a divisor.
struct Hyperparameters {
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  double lambda = 1.0;
  PriorMode mode = PriorMode::Combined;
  std::vector<char> element_pruned;
  std::vector<char> group_pruned;

  static Hyperparameters initial(const GroupStructure& groups, double lambda,
                                 PriorMode mode = PriorMode::Combined, double beta0 = 1.0,
                                 double gamma0 = 1.0);

  double prior_variance(const GroupStructure& groups, int q) const;
  bool uses_beta() const { return mode != PriorMode::GroupOnly; }
  bool uses_gamma() const { return mode != PriorMode::ElementOnly; }
  void validate(const GroupStructure& groups) const;
};

struct PosteriorMoments {
  Eigen::VectorXd mu;     // D
  Eigen::MatrixXd sigma;  // D x D; zero rows and columns for pruned entries
};

/// Direct inverts in coefficient space; Woodbury factors the (t-k) x (t-k)
/// matrix lambda I + Phi P Phi^T. Auto picks the smaller system.
enum class PosteriorPath { Auto, Direct, Woodbury };

PosteriorMoments posterior_moments(const RegressionProblem& prob, const Hyperparameters& hyper,
                                   PosteriorPath path = PosteriorPath::Auto);

/// u(w, hyper) = ||y - Phi w||^2 / lambda + ||w||^2_{Gamma^-1} + ||w - eps||^2_{B^-1}.
double quadratic_part(const RegressionProblem& prob, const Hyperparameters& hyper,
                      const Eigen::VectorXd& w);
/// log|B + Gamma| + log|lambda I + Phi P Phi^T| over unpruned entries (the
/// negated concave-side function of the DC split).
double log_det_part(const RegressionProblem& prob, const Hyperparameters& hyper);
/// Joint Type-II objective: quadratic_part + log_det_part.
double type2_cost(const RegressionProblem& prob, const Hyperparameters& hyper,
                  const Eigen::VectorXd& w);
/// min_w type2_cost, i.e. -2 log of the marginal likelihood up to constants.
double marginal_cost(const RegressionProblem& prob, const Hyperparameters& hyper);

/// Negated gradients of the concave side at the current hyperparameters.
/// Entries are +infinity for coefficients pinned at zero by pruning and 0 for
/// the variance family the prior mode ignores.
struct CccpWeights {
  Eigen::VectorXd g_beta;   // D
  Eigen::VectorXd g_gamma;  // G
  double g_lambda = 0.0;
};

CccpWeights cccp_weights(const RegressionProblem& prob, const Hyperparameters& hyper);

struct InnerOptions {
  /// Coordinate-descent stopping tolerance on the largest coefficient change.
  double tol = 1e-10;
  int max_sweeps = 5000;
  /// Sweeps between scale updates and active-set Newton attempts.
  int sweeps_per_round = 10;
  /// Lower bound on the residual scale (noise-free data drive it to zero).
  double scale_floor = 1e-14;
  /// Sweeps after which an unconverged solve switches to the barrier method.
  int barrier_after_sweeps = 200;
  /// Relative duality-gap target of the barrier method.
  double barrier_gap = 1e-10;
  /// Barrier coefficients below this fraction of the largest are zeroed
  /// before the support Newton step.
  double barrier_zero_rel = 1e-6;
};

struct InnerResult {
  Eigen::VectorXd w;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// sqrt(g_lambda) ||y - Phi w|| + sum_r sqrt(g_gamma_r) ||w_r|| + sum_q sqrt(g_beta_q) |w_q - eps_q|.
double inner_objective(const RegressionProblem& prob, const CccpWeights& weights,
                       const Eigen::VectorXd& w);

/// Minimizes inner_objective by block coordinate descent over groups, with the
/// residual norm written as min_s ||r||^2 / (2s) + g_lambda s / 2 and s updated
/// in closed form between sweeps (s >= scale_floor). Once the support settles,
/// a Newton solve on the support finishes the job and the optimality conditions
/// are checked on every coordinate; converged means they hold. Solves still
/// open after barrier_after_sweeps finish with a log-barrier interior-point
/// method; its duality gap also certifies convergence. With fixed_lambda set,
/// the data term is ||r||^2 / (2 fixed_lambda) instead.
InnerResult solve_inner_sgl(const RegressionProblem& prob, const CccpWeights& weights,
                            const Eigen::VectorXd& w_init, const InnerOptions& opts = {},
                            double fixed_lambda = 0.0);

/// Scaled-form sharing ADMM for the same problem: groups update their own
/// coefficients, the averaged prediction and dual variable are shared.
struct AdmmState {
  Eigen::VectorXd w;          // D
  Eigen::VectorXd z_bar;      // n
  Eigen::VectorXd u;          // n, scaled dual
  Eigen::VectorXd phi_w_bar;  // n, average of Phi_r w_r
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int round = 0;
};

struct AdmmOptions {
  double rho = 1.0;
  double tol = 1e-6;
  int max_rounds = 5000;
};

AdmmState admm_init(const RegressionProblem& prob, const Eigen::VectorXd& w_init);
AdmmState admm_step(const RegressionProblem& prob, const CccpWeights& weights,
                    const AdmmState& state, double rho, double fixed_lambda = 0.0);
/// Positive-part shrinkage of the shared variable: c/||c|| (||c|| - kappa)_+.
Eigen::VectorXd shrink_shared(const Eigen::VectorXd& c, double kappa);
InnerResult solve_inner_admm(const RegressionProblem& prob, const CccpWeights& weights,
                             const Eigen::VectorXd& w_init, const AdmmOptions& opts = {},
                             double fixed_lambda = 0.0);

/// Minimizes 1/2 x^T H x - c^T x + mu ||x|| + sum_q nu_q |x_q - eps_q| for one
/// group. Exact (polished to machine precision) when eps = 0; the elementwise
/// then group shrinkage used for eps != 0 is an approximation.
Eigen::VectorXd solve_group_prox(const Eigen::MatrixXd& h, const Eigen::VectorXd& c, double mu,
                                 const Eigen::VectorXd& nu, const Eigen::VectorXd& eps,
                                 const Eigen::VectorXd& x0, double lipschitz, double tol = 1e-12,
                                 int max_iter = 20000);

enum class SolverKind { Cccp, Admm, Em };

struct SolverOptions {
  SolverKind solver = SolverKind::Cccp;
  PriorMode mode = PriorMode::Combined;
  int max_outer = 100;
  double w_tol = 1e-6;
  double cost_tol = 1e-9;
  double group_prune_rel = 1e-8;
  double element_prune = 1e-12;
  /// Hold lambda at its initial value instead of re-estimating it.
  bool fix_lambda = false;
  /// lambda >= lambda_floor_rel * ||y||^2 / n.
  double lambda_floor_rel = 1e-12;
  InnerOptions inner;
  AdmmOptions admm;
};

struct InferenceResult {
  int node = 0;
  int k = 1;
  bool lagged = true;
  GroupStructure groups;
  Eigen::VectorXd w;
  Eigen::VectorXd group_norms;
  Eigen::VectorXd confidences;  // ||w_r|| / ||w||
  std::vector<int> estimated_orders;
  Hyperparameters hyper;
  std::vector<double> cost_trajectory;
  int iterations = 0;
  bool converged = false;
};

/// Convex-concave procedure; SolverKind::Admm swaps the inner solver for the
/// sharing ADMM.
InferenceResult cccp_solve(const RegressionProblem& prob, const Hyperparameters& init,
                           const SolverOptions& opts = {});
/// Expectation maximization with w as the latent variable.
InferenceResult em_solve(const RegressionProblem& prob, const Hyperparameters& init,
                         const SolverOptions& opts = {});
/// Dispatches on opts.solver with Hyperparameters::initial(groups, lambda0, opts.mode).
InferenceResult solve(const RegressionProblem& prob, double lambda0, const SolverOptions& opts);

/// Residual variance of the minimum-norm least-squares fit of prob.
double estimate_noise_least_squares(const RegressionProblem& prob);
/// Residual variance of a least-squares order-k_big ARX fit of one node;
/// ridge 1e-6 when the fit is underdetermined.
double estimate_noise_high_order(const TimeSeriesData& data, int node, int k_big);
/// Largest k_big <= k_max leaving at least two rows per regressor (>= 1).
int default_noise_order(const TimeSeriesData& data, int k_max);

struct ThresholdPolicy {
  double rel_group = 1e-3;
  double rel_element = 1e-3;
};

/// Estimated order of one group: lag position of the leftmost significant
/// coefficient for lagged groups, count of significant terms otherwise.
int estimate_group_order(const Eigen::VectorXd& group, bool lagged, double rel_element);
/// Fills group_norms, confidences and estimated_orders from w.
void summarize_result(InferenceResult& result, const ThresholdPolicy& policy = {});

struct NetworkEstimate {
  Topology topology;
  Eigen::MatrixXd a_confidence;  // p x p, (i, j) = confidence of j -> i
  Eigen::MatrixXd b_confidence;  // p x m
  Eigen::MatrixXi a_orders;
  Eigen::MatrixXi b_orders;
};

/// One result per node, in node order.
NetworkEstimate extract_network(const std::vector<InferenceResult>& results, int p, int m,
                                const ThresholdPolicy& policy = {});

}  // namespace gesbl
