/* Dense linear algebra and closed-form proximal/projection operators shared
 * by the three problem families: sparsity-box and affine-set projections,
 * the regularized least-squares prox, rank projection via truncated SVD,
 * singular-value soft-thresholding and the masked quadratic prox.
 */
#pragma once

#include "pdrs/types.hpp"

#include <memory>

namespace pdrs {

/* Thrown when a gamma-keyed factorization is used with a different gamma
 * than it was prepared for. */
struct StaleFactorization : std::logic_error {
  using std::logic_error::logic_error;
};

/* D = { z : ||z||_0 <= sparsity, ||z||_inf <= bound }. */
struct SparsityBox {
  int sparsity = 1;
  double bound = 1e6;
};

/* Euclidean projection onto the sparsity box. For each coordinate the box
 * clamp c_i = clamp(x_i, +-bound) reduces the squared distance by
 * gain_i = x_i^2 - (x_i - c_i)^2; keeping the r coordinates with the largest
 * gain (ties to the smallest index) is the exact projection even when the
 * bound binds, unlike plain top-r magnitude selection. */
Vec project_sparsity_box(const Vec& x, const SparsityBox& box);

/* Exact membership test; projection outputs satisfy it exactly. */
bool in_sparsity_box(const Vec& x, const SparsityBox& box);

/* C = { z : A z = b } with A full row rank; caches the Cholesky factor of
 * A A^T so projections cost two mat-vecs and a triangular solve. */
class AffineSetHandle {
 public:
  AffineSetHandle(Mat a, Vec b);

  // x + A^T (A A^T)^{-1} (b - A x), the Euclidean projection onto C.
  Vec project(const Vec& x) const;
  double dist_sq(const Vec& x) const;  // squared Euclidean distance to C

  const Mat& matrix() const { return a_; }
  const Vec& rhs() const { return b_; }
  Eigen::Index rows() const { return a_.rows(); }
  Eigen::Index cols() const { return a_.cols(); }

 private:
  Mat a_;
  Vec b_;
  Eigen::LLT<Mat> gram_llt_;
};

Vec project_affine(const Vec& x, const AffineSetHandle& h);

/* prox of (gamma/2) d_C^2: (x + gamma P_C(x)) / (1 + gamma). */
Vec dist_prox(const Vec& x, const AffineSetHandle& h, double gamma);

/* Solves (gamma A^T A + ridge I) u = rhs, factorization cached per
 * (gamma, ridge). For m < n the m x m identity
 *   u = (rhs - gamma A^T (ridge I + gamma A A^T)^{-1} A rhs) / ridge
 * keeps the factorization cost O(m^2 n); for m >= n the n x n system is
 * factorized directly. ridge is 1 for the PDR prox and 1 + beta gamma L for
 * the shifted PR update. */
class LsProxHandle {
 public:
  LsProxHandle(std::shared_ptr<const Mat> a, std::shared_ptr<const Vec> b);

  // Rebuilds the factorization; no-op when already prepared for (gamma, ridge).
  void prepare(double gamma, double ridge = 1.0);

  // Solves (gamma A^T A + ridge I) u = gamma A^T b + x.
  Vec apply(const Vec& x) const;
  // Solves (gamma A^T A + ridge I) u = rhs.
  Vec solve(const Vec& rhs) const;

  double gamma() const { return gamma_; }
  double ridge() const { return ridge_; }
  const Mat& matrix() const { return *a_; }
  const Vec& rhs_vector() const { return *b_; }

 private:
  std::shared_ptr<const Mat> a_;
  std::shared_ptr<const Vec> b_;
  Vec atb_;
  Eigen::LLT<Mat> llt_;
  double gamma_ = kNaN;
  double ridge_ = kNaN;
  bool wide_ = false;
};

/* The least-squares prox u = argmin 1/2||Au-b||^2 + 1/(2 gamma)||u-x||^2.
 * Throws StaleFactorization unless the handle was prepared for gamma
 * (with ridge 1). gamma = 0 returns x. */
Vec ls_prox(const LsProxHandle& h, const Vec& x, double gamma);

struct LambdaMaxResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/* Largest eigenvalue of A^T A (= sigma_max(A)^2) by power iteration on the
 * smaller Gram matrix; deterministic all-ones start, relative tolerance on
 * successive Rayleigh quotients. Returns the best estimate with
 * converged = false when the tolerance is not met within max_iter. */
LambdaMaxResult lambda_max(const Mat& a, double rel_tol = 1e-6, int max_iter = 5000);

struct TruncatedSvd {
  Mat u;  // n1 x k
  Vec s;  // k
  Mat v;  // n2 x k
};

/* Rank-r truncated SVD. Small matrices use a dense decomposition; once
 * min(n1, n2) >= kTruncatedSvdDenseLimit a block power iteration on the
 * smaller Gram matrix is used instead, iterated until the subspace residual
 * falls below subspace_tol. */
inline constexpr Eigen::Index kTruncatedSvdDenseLimit = 2000;

TruncatedSvd truncated_svd(const Mat& x, int r);
TruncatedSvd truncated_svd_dense(const Mat& x, int r);
TruncatedSvd truncated_svd_subspace(const Mat& x, int r, double subspace_tol = 1e-8,
                                    int max_iter = 1000);

/* Best rank-<=r approximation in Frobenius norm. Singular-value ties at the
 * cut keep the earlier indices of the computed decomposition. */
Mat project_rank(const Mat& x, int r);

/* Singular-value soft-thresholding: U diag((sigma_j - tau)_+) V^T keeping
 * only sigma_j > tau. This is prox_{tau ||.||_*}. */
Mat svt_shrink(const Mat& x, double tau);

/* Observed entries of a partially known matrix: strictly increasing
 * row-major flat indices (i * cols + j) with the observed values alongside. */
struct ObservedEntries {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::int64_t> flat;
  std::vector<double> values;

  std::size_t count() const { return flat.size(); }
  Eigen::Index row_of(std::size_t k) const { return static_cast<Eigen::Index>(flat[k] / cols); }
  Eigen::Index col_of(std::size_t k) const { return static_cast<Eigen::Index>(flat[k] % cols); }
  double norm() const;  // ||P_Omega(M)||_F
  void validate() const;
};

/* Entrywise prox of (1/2)||P_Omega(X) - P_Omega(M)||^2: observed entries move
 * to (X_ij + gamma M_ij)/(1 + gamma), unobserved entries are unchanged. */
Mat masked_quadratic_prox(const Mat& x, const ObservedEntries& obs, double gamma);

/* P_Omega(X) - P_Omega(M) materialized as a dense matrix (zero off Omega). */
Mat omega_residual_matrix(const Mat& x, const ObservedEntries& obs);

double omega_residual_norm(const Mat& x, const ObservedEntries& obs);

}  // namespace pdrs
