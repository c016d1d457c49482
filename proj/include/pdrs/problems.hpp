/* Adapters binding the three experiment families to SplittingScheme, plus the
 * baseline iterations (shifted Peaceman-Rachford, alternating projections,
 * SVP, SVT) and the per-run success metrics.
 *
 * PDR schemes use the regularized indicator g = I_D - (2-alpha)/(2 gamma)||.||^2
 * whose prox is the scaled projection P_D((alpha u - x)/(alpha - 1)); the
 * regularizer cancels the alpha-dependent stationarity shift, so cluster
 * points are critical for the original problem. The plain-g variant (matrix
 * completion "method 2") projects P_D(alpha u - x) instead.
 */
#pragma once

#include "pdrs/core.hpp"
#include "pdrs/prox.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace pdrs {

struct SparseLsInstance {
  std::shared_ptr<const Mat> a;
  std::shared_ptr<const Vec> b;
  SparsityBox box;
  double lambda_max = 0.0;  // L = lambda_max(A^T A)
  bool lambda_max_converged = true;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
};

struct FeasibilityInstance {
  std::shared_ptr<const AffineSetHandle> affine;
  SparsityBox box;
  std::uint64_t seed = 0;
};

struct CompletionInstance {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  ObservedEntries observed;
  int rank = 0;
  double sampling_ratio = 0.0;  // p = |Omega| / (rows*cols)
  std::shared_ptr<const Mat> ground_truth;  // retained for synthetic instances only
  std::uint64_t seed = 0;

  void validate() const;
};

struct SchemeVariant {
  enum class Kind {
    PdrRegularizedG,        // PDR with the cancelling regularizer in g
    PdrPlainG,              // PDR on the plain indicator (completion method 2)
    PrShifted,              // Peaceman-Rachford with strong-convexity shift beta
    AlternatingProjection,  // P_D after P_C, feasibility only
    Svp,                    // projected gradient with eta_t = 1/(p sqrt(t))
    Svt,                    // singular value thresholding
  };

  Kind kind = Kind::PdrRegularizedG;
  double alpha = 2.0;  // PDR kinds
  double beta = 2.2;   // PR kind; requires beta > 2

  static SchemeVariant pdr(double alpha) { return {Kind::PdrRegularizedG, alpha, 2.2}; }
  static SchemeVariant pdr_plain(double alpha) { return {Kind::PdrPlainG, alpha, 2.2}; }
  static SchemeVariant pr(double beta = 2.2) { return {Kind::PrShifted, 2.0, beta}; }
  static SchemeVariant alternating() { return {Kind::AlternatingProjection, 2.0, 2.2}; }
  static SchemeVariant svp() { return {Kind::Svp, 2.0, 2.2}; }
  static SchemeVariant svt() { return {Kind::Svt, 2.0, 2.2}; }

  void validate() const;
};

/* Shifted-PR step-size bookkeeping: the safeguard floor is
 * gamma1 = (beta-2)/((beta+1)^2 L) and runs start at 0.93/(beta L). */
double pr_gamma_floor(double beta, double lipschitz);
double pr_gamma_start(double beta, double lipschitz);

/* Builds the scheme with its gamma-keyed caches prepared for the given
 * initial step size. PDR variants accept any gamma > 0; the PR variants
 * reject gamma with 1 - beta L gamma <= 0. */
SplittingScheme build_sparse_ls(const SparseLsInstance& inst, const SchemeVariant& variant,
                                double gamma);

SplittingScheme build_feasibility(const FeasibilityInstance& inst, const SchemeVariant& variant,
                                  double gamma);

/* P_D applied to the affine projection of x: one alternating-projection
 * sweep. */
Vec alternating_projection_step(const FeasibilityInstance& inst, const Vec& x);

SplittingScheme build_alternating_projection(const FeasibilityInstance& inst);

/* Matrix completion. PdrRegularizedG is "method 1", PdrPlainG is "method 2";
 * both use the masked quadratic prox for the U-update and project the rank
 * set for V. The divergence monitor watches the U block with its Frobenius
 * norm divided by the matrix side. */
SplittingScheme build_completion(const CompletionInstance& inst, const SchemeVariant& variant,
                                 double gamma);

/* One SVP iteration: gradient step on the observed residual with
 * eta_t = 1/(p sqrt(t)), then rank projection. gradient_point receives the
 * pre-projection matrix when non-null. */
Mat svp_step(const CompletionInstance& inst, const Mat& x, int t, Mat* gradient_point = nullptr);

SplittingScheme build_svp(const CompletionInstance& inst);

/* One SVT iteration: soft-threshold the singular values of X at tau, then
 * re-anchor the observed entries with step delta; off-Omega entries of the
 * result are exactly zero. Defaults: tau = 5 n1, delta = 1.2/p. */
Mat svt_step(const CompletionInstance& inst, const Mat& x, double tau, double delta,
             Mat* shrunk = nullptr);

SplittingScheme build_svt(const CompletionInstance& inst, std::optional<double> tau = {},
                          std::optional<double> delta = {});

/* Termination rule for completion runs, replacing the relative-change rule:
 * || P_Omega(V - M) ||_F / || P_Omega(M) ||_F < tol, evaluated at the
 * feasible block V. */
bool completion_residual_stop(const ObservedEntries& obs, const Vec& v_flat, double tol);

struct RunMetrics {
  int iterations = 0;
  double wall_time = 0.0;
  Termination termination = Termination::MaxIter;
  double final_residual = kNaN;        // ||v - u|| at the last step
  std::optional<double> fval;          // sparse LS and feasibility
  std::optional<bool> success;         // feasibility: fval < 1e-12
  std::optional<double> rel_err;       // completion, needs ground truth
};

inline constexpr double kFeasibilitySuccessThreshold = 1e-12;

/* Metrics are evaluated at the final v, the block guaranteed feasible for
 * indicator constraints. */
RunMetrics evaluate_run(const SparseLsInstance& inst, const SolveTrace& trace);
RunMetrics evaluate_run(const FeasibilityInstance& inst, const SolveTrace& trace);
RunMetrics evaluate_run(const CompletionInstance& inst, const SolveTrace& trace);

/* Self-describing JSON containers for instances: family tag, dimensions,
 * generator seed, and the dense or sampled data. */
std::string save_instance_json(const SparseLsInstance& inst);
std::string save_instance_json(const FeasibilityInstance& inst);
std::string save_instance_json(const CompletionInstance& inst);

SparseLsInstance load_sparse_ls_json(const std::string& text);
FeasibilityInstance load_feasibility_json(const std::string& text);
CompletionInstance load_completion_json(const std::string& text);

}  // namespace pdrs
