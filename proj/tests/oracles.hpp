/* Test-only oracles, kept independent of the implementation paths they
 * check: exhaustive support enumeration for the sparsity-box projection,
 * bisection for the step-size threshold, locally coded classical DR steps,
 * and first-order-condition verifiers for the proximal operators.
 */
#pragma once

#include "pdrs/problems.hpp"

#include <random>

namespace pdrs::oracle {

inline Vec random_vec(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                      double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

struct BruteProjection {
  Vec point;
  double dist_sq = kInf;
};

/* Enumerates every support of size r (n choose r candidates), clamps on the
 * support, and returns the closest candidate; ties keep the first support in
 * lexicographic order. */
inline BruteProjection brute_force_sparsity_projection(const Vec& x, int r, double bound) {
  const int n = static_cast<int>(x.size());
  std::vector<int> comb(r);
  for (int i = 0; i < r; ++i) comb[i] = i;

  BruteProjection best;
  for (;;) {
    Vec candidate = Vec::Zero(n);
    for (int i = 0; i < r; ++i) {
      const int idx = comb[i];
      candidate(idx) = std::min(std::max(x(idx), -bound), bound);
    }
    const double dist = (x - candidate).squaredNorm();
    if (dist < best.dist_sq) {
      best.dist_sq = dist;
      best.point = candidate;
    }

    int pos = r - 1;
    while (pos >= 0 && comb[pos] == n - r + pos) --pos;
    if (pos < 0) break;
    ++comb[pos];
    for (int i = pos + 1; i < r; ++i) comb[i] = comb[i - 1] + 1;
  }
  return best;
}

/* Bisection root of h on (0, hi], independent of the closed-form solver. */
inline double gamma_threshold_by_bisection(double alpha, double lipschitz, double weak_convexity) {
  double lo = 0.0;
  double hi = 1.0 / lipschitz;
  while (step_size_condition(alpha, hi, lipschitz, weak_convexity) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (step_size_condition(alpha, mid, lipschitz, weak_convexity) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/* Classical DR for the sparse-LS family, coded directly from its update
 * formulas with a dense solver. */
struct SparseLsDrReference {
  Mat a;
  Vec b;
  SparsityBox box;
  Eigen::LDLT<Mat> solver;
  double gamma;

  SparseLsDrReference(const Mat& a_in, const Vec& b_in, SparsityBox box_in, double gamma_in)
      : a(a_in), b(b_in), box(box_in), gamma(gamma_in) {
    solver.compute(gamma * (a.transpose() * a) + Mat::Identity(a.cols(), a.cols()));
  }

  IterateTriple step(const IterateTriple& st) const {
    IterateTriple nx;
    nx.u = solver.solve(gamma * (a.transpose() * b) + st.x);
    nx.v = project_sparsity_box(2.0 * nx.u - st.x, box);
    nx.x = st.x + (nx.v - nx.u);
    nx.t = st.t + 1;
    return nx;
  }
};

struct FeasibilityDrReference {
  Mat a;
  Vec b;
  SparsityBox box;
  Eigen::LLT<Mat> gram;
  double gamma;

  FeasibilityDrReference(const Mat& a_in, const Vec& b_in, SparsityBox box_in, double gamma_in)
      : a(a_in), b(b_in), box(box_in), gamma(gamma_in) {
    gram.compute(a * a.transpose());
  }

  Vec project_c(const Vec& x) const { return x + a.transpose() * gram.solve(b - a * x); }

  IterateTriple step(const IterateTriple& st) const {
    IterateTriple nx;
    nx.u = (st.x + gamma * project_c(st.x)) / (1.0 + gamma);
    nx.v = project_sparsity_box(2.0 * nx.u - st.x, box);
    nx.x = st.x + (nx.v - nx.u);
    nx.t = st.t + 1;
    return nx;
  }
};

struct CompletionDrReference {
  CompletionInstance inst;
  double gamma;

  IterateTriple step(const IterateTriple& st) const {
    const Mat x = unflatten_row_major(st.x, inst.rows, inst.cols);
    Mat u = x;
    for (std::size_t k = 0; k < inst.observed.count(); ++k) {
      const auto i = inst.observed.row_of(k);
      const auto j = inst.observed.col_of(k);
      u(i, j) = (x(i, j) + gamma * inst.observed.values[k]) / (1.0 + gamma);
    }
    const Mat arg = 2.0 * u - x;
    Eigen::BDCSVD<Mat> svd(arg, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int r = inst.rank;
    const Mat v = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                  svd.matrixV().leftCols(r).transpose();
    IterateTriple nx;
    nx.u = flatten_row_major(u);
    nx.v = flatten_row_major(v);
    nx.x = st.x + (nx.v - nx.u);
    nx.t = st.t + 1;
    return nx;
  }
};

inline double max_block_diff(const IterateTriple& a, const IterateTriple& b) {
  return std::max({(a.u - b.u).lpNorm<Eigen::Infinity>(), (a.v - b.v).lpNorm<Eigen::Infinity>(),
                   (a.x - b.x).lpNorm<Eigen::Infinity>()});
}

/* Subgradient-condition verifier for Y = prox_{tau ||.||_*}(X): X - Y must be
 * tau (U1 V1^T + W) with U1^T W = 0, W V1 = 0, ||W||_2 <= 1. Returns the
 * largest constraint violation. */
inline double nuclear_prox_optimality_gap(const Mat& x, const Mat& y, double tau) {
  const Mat g = x - y;
  Eigen::BDCSVD<Mat> svd_y(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd_y.singularValues();
  int rank = 0;
  while (rank < s.size() && s(rank) > 1e-10 * std::max(1.0, s(0))) ++rank;
  const Mat u1 = svd_y.matrixU().leftCols(rank);
  const Mat v1 = svd_y.matrixV().leftCols(rank);

  double gap = 0.0;
  // On the positive part the alignment must be exact: U1^T G V1 = tau I.
  const Mat aligned = u1.transpose() * g * v1;
  gap = std::max(gap, (aligned - tau * Mat::Identity(rank, rank)).lpNorm<Eigen::Infinity>());
  // The remainder W = (G - tau U1 V1^T)/tau must vanish against U1, V1 ...
  const Mat w = (g - tau * u1 * v1.transpose()) / tau;
  if (rank > 0) {
    gap = std::max(gap, (u1.transpose() * w).lpNorm<Eigen::Infinity>());
    gap = std::max(gap, (w * v1).lpNorm<Eigen::Infinity>());
  }
  // ... and have spectral norm at most 1.
  Eigen::BDCSVD<Mat> svd_w(w);
  const double w_norm = svd_w.singularValues().size() > 0 ? svd_w.singularValues()(0) : 0.0;
  gap = std::max(gap, std::max(0.0, w_norm - 1.0));
  return gap;
}

}  // namespace pdrs::oracle
