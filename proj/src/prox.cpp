#include "pdrs/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdrs {

Vec project_sparsity_box(const Vec& x, const SparsityBox& box) {
  if (box.sparsity <= 0) throw std::invalid_argument("project_sparsity_box: sparsity must be positive");
  if (!(box.bound > 0.0)) throw std::invalid_argument("project_sparsity_box: bound must be positive");
  const Eigen::Index n = x.size();
  if (box.sparsity > n)
    throw std::invalid_argument("project_sparsity_box: sparsity level exceeds the dimension");

  const Vec clipped = x.cwiseMax(-box.bound).cwiseMin(box.bound);
  Vec gain(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = x(i) - clipped(i);
    gain(i) = x(i) * x(i) - off * off;
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + box.sparsity, order.end(),
                    [&gain](Eigen::Index a, Eigen::Index b) {
                      if (gain(a) != gain(b)) return gain(a) > gain(b);
                      return a < b;
                    });

  Vec out = Vec::Zero(n);
  for (int k = 0; k < box.sparsity; ++k) out(order[k]) = clipped(order[k]);
  return out;
}

bool in_sparsity_box(const Vec& x, const SparsityBox& box) {
  int nonzeros = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) != 0.0) ++nonzeros;
    if (std::abs(x(i)) > box.bound) return false;
  }
  return nonzeros <= box.sparsity;
}

AffineSetHandle::AffineSetHandle(Mat a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() == 0 || a_.cols() == 0)
    throw std::invalid_argument("AffineSetHandle: empty matrix");
  if (a_.rows() != b_.size())
    throw std::invalid_argument("AffineSetHandle: row count of A must match the length of b");
  gram_llt_.compute(a_ * a_.transpose());
  if (gram_llt_.info() != Eigen::Success)
    throw std::runtime_error("AffineSetHandle: A A^T is not positive definite; A must have full row rank");
}

Vec AffineSetHandle::project(const Vec& x) const {
  return x + a_.transpose() * gram_llt_.solve(b_ - a_ * x);
}

double AffineSetHandle::dist_sq(const Vec& x) const { return (x - project(x)).squaredNorm(); }

Vec project_affine(const Vec& x, const AffineSetHandle& h) { return h.project(x); }

Vec dist_prox(const Vec& x, const AffineSetHandle& h, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("dist_prox: gamma must be positive");
  return (x + gamma * h.project(x)) / (1.0 + gamma);
}

LsProxHandle::LsProxHandle(std::shared_ptr<const Mat> a, std::shared_ptr<const Vec> b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (!a_ || !b_) throw std::invalid_argument("LsProxHandle: null matrix or rhs");
  if (a_->rows() != b_->size())
    throw std::invalid_argument("LsProxHandle: row count of A must match the length of b");
  atb_ = a_->transpose() * (*b_);
  wide_ = a_->rows() < a_->cols();
}

void LsProxHandle::prepare(double gamma, double ridge) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("LsProxHandle: gamma must be nonnegative");
  if (!(ridge > 0.0)) throw std::invalid_argument("LsProxHandle: ridge must be positive");
  if (gamma == gamma_ && ridge == ridge_) return;

  const Mat& a = *a_;
  if (wide_) {
    const Eigen::Index m = a.rows();
    llt_.compute(ridge * Mat::Identity(m, m) + gamma * (a * a.transpose()));
  } else {
    const Eigen::Index n = a.cols();
    llt_.compute(gamma * (a.transpose() * a) + ridge * Mat::Identity(n, n));
  }
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("LsProxHandle: factorization failed");
  gamma_ = gamma;
  ridge_ = ridge;
}

Vec LsProxHandle::solve(const Vec& rhs) const {
  if (std::isnan(gamma_)) throw StaleFactorization("LsProxHandle: prepare() has not been called");
  if (wide_) return (rhs - gamma_ * (a_->transpose() * llt_.solve(*a_ * rhs))) / ridge_;
  return llt_.solve(rhs);
}

Vec LsProxHandle::apply(const Vec& x) const { return solve(gamma_ * atb_ + x); }

Vec ls_prox(const LsProxHandle& h, const Vec& x, double gamma) {
  if (gamma != h.gamma() || h.ridge() != 1.0)
    throw StaleFactorization("ls_prox: handle not prepared for this gamma");
  return h.apply(x);
}

LambdaMaxResult lambda_max(const Mat& a, double rel_tol, int max_iter) {
  if (a.size() == 0 || a.isZero(0.0))
    throw std::invalid_argument("lambda_max: matrix must be nonzero");

  const bool wide = a.rows() < a.cols();
  const Mat gram = wide ? Mat(a * a.transpose()) : Mat(a.transpose() * a);
  const Eigen::Index dim = gram.rows();

  Vec q = Vec::Ones(dim) / std::sqrt(static_cast<double>(dim));
  LambdaMaxResult result;
  double estimate = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vec z = gram * q;
    const double rayleigh = q.dot(z);
    const double nz = z.norm();
    if (nz == 0.0) {
      // Start vector landed in the kernel; restart from a canonical axis.
      q = Vec::Unit(dim, it % dim);
      continue;
    }
    if (it > 1 && std::abs(rayleigh - estimate) <= rel_tol * std::max(std::abs(rayleigh), 1e-300)) {
      result.value = rayleigh;
      result.converged = true;
      result.iterations = it;
      return result;
    }
    estimate = rayleigh;
    q = z / nz;
  }
  result.value = estimate;
  result.converged = false;
  result.iterations = max_iter;
  return result;
}

TruncatedSvd truncated_svd_dense(const Mat& x, int r) {
  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int k = static_cast<int>(std::min<Eigen::Index>(r, svd.singularValues().size()));
  return {svd.matrixU().leftCols(k), svd.singularValues().head(k), svd.matrixV().leftCols(k)};
}

TruncatedSvd truncated_svd_subspace(const Mat& x, int r, double subspace_tol, int max_iter) {
  const bool tall = x.rows() >= x.cols();
  // Iterate on the smaller Gram matrix.
  const Mat gram = tall ? Mat(x.transpose() * x) : Mat(x * x.transpose());
  const Eigen::Index dim = gram.rows();
  const Eigen::Index block = std::min<Eigen::Index>(dim, r + 8);

  // Deterministic start block: fixed xorshift stream, independent of input.
  Mat q(dim, block);
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      q(i, j) = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    }
  q = Eigen::HouseholderQR<Mat>(q).householderQ() * Mat::Identity(dim, block);

  for (int it = 0; it < max_iter; ++it) {
    const Mat z = gram * q;
    // Subspace residual of the current block: || G Q - Q (Q^T G Q) ||_F.
    const Mat projected = q.transpose() * z;
    const double res = (z - q * projected).norm() / std::max(1.0, z.norm());
    q = Eigen::HouseholderQR<Mat>(z).householderQ() * Mat::Identity(dim, block);
    if (res <= subspace_tol) break;
  }

  // Recover singular triplets from the converged subspace.
  TruncatedSvd out;
  if (tall) {
    const Mat c = x * q;  // n1 x block
    Eigen::BDCSVD<Mat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int k = static_cast<int>(std::min<Eigen::Index>(r, svd.singularValues().size()));
    out.u = svd.matrixU().leftCols(k);
    out.s = svd.singularValues().head(k);
    out.v = q * svd.matrixV().leftCols(k);
  } else {
    const Mat c = x.transpose() * q;  // n2 x block
    Eigen::BDCSVD<Mat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int k = static_cast<int>(std::min<Eigen::Index>(r, svd.singularValues().size()));
    out.u = q * svd.matrixV().leftCols(k);
    out.s = svd.singularValues().head(k);
    out.v = svd.matrixU().leftCols(k);
  }
  return out;
}

TruncatedSvd truncated_svd(const Mat& x, int r) {
  if (std::min(x.rows(), x.cols()) >= kTruncatedSvdDenseLimit)
    return truncated_svd_subspace(x, r);
  return truncated_svd_dense(x, r);
}

Mat project_rank(const Mat& x, int r) {
  if (r <= 0) throw std::invalid_argument("project_rank: rank must be positive");
  if (r > std::min(x.rows(), x.cols()))
    throw std::invalid_argument("project_rank: rank exceeds matrix dimensions");
  const TruncatedSvd t = truncated_svd(x, r);
  return t.u * t.s.asDiagonal() * t.v.transpose();
}

Mat svt_shrink(const Mat& x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("svt_shrink: tau must be positive");
  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  int k = 0;
  while (k < s.size() && s(k) > tau) ++k;
  if (k == 0) return Mat::Zero(x.rows(), x.cols());
  const Vec shrunk = s.head(k).array() - tau;
  return svd.matrixU().leftCols(k) * shrunk.asDiagonal() * svd.matrixV().leftCols(k).transpose();
}

double ObservedEntries::norm() const {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  return std::sqrt(sq);
}

void ObservedEntries::validate() const {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("ObservedEntries: empty shape");
  if (flat.size() != values.size())
    throw std::invalid_argument("ObservedEntries: index/value length mismatch");
  const std::int64_t total = static_cast<std::int64_t>(rows) * cols;
  std::int64_t prev = -1;
  for (std::int64_t f : flat) {
    if (f <= prev) throw std::invalid_argument("ObservedEntries: indices must be strictly increasing");
    if (f < 0 || f >= total) throw std::invalid_argument("ObservedEntries: index out of range");
    prev = f;
  }
}

Mat masked_quadratic_prox(const Mat& x, const ObservedEntries& obs, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("masked_quadratic_prox: gamma must be positive");
  Mat out = x;
  const double scale = 1.0 / (1.0 + gamma);
  for (std::size_t k = 0; k < obs.count(); ++k) {
    const Eigen::Index i = obs.row_of(k);
    const Eigen::Index j = obs.col_of(k);
    out(i, j) = scale * (x(i, j) + gamma * obs.values[k]);
  }
  return out;
}

Mat omega_residual_matrix(const Mat& x, const ObservedEntries& obs) {
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (std::size_t k = 0; k < obs.count(); ++k) {
    const Eigen::Index i = obs.row_of(k);
    const Eigen::Index j = obs.col_of(k);
    out(i, j) = x(i, j) - obs.values[k];
  }
  return out;
}

double omega_residual_norm(const Mat& x, const ObservedEntries& obs) {
  double sq = 0.0;
  for (std::size_t k = 0; k < obs.count(); ++k) {
    const double d = x(obs.row_of(k), obs.col_of(k)) - obs.values[k];
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace pdrs
