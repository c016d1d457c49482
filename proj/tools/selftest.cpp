#include "selftest.hpp"

#include "pdrs/bench.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace pdrs {

namespace {

/* Exhaustive projection onto the sparsity box: enumerate every support of
 * size r, clamp on the support, keep the smallest squared distance. */
double brute_force_projection_dist_sq(const Vec& x, int r, double bound) {
  const int n = static_cast<int>(x.size());
  std::vector<int> comb(r);
  for (int i = 0; i < r; ++i) comb[i] = i;

  double best = kInf;
  for (;;) {
    double dist = 0.0;
    int c = 0;
    for (int i = 0; i < n; ++i) {
      if (c < r && comb[c] == i) {
        const double clipped = std::min(std::max(x(i), -bound), bound);
        dist += (x(i) - clipped) * (x(i) - clipped);
        ++c;
      } else {
        dist += x(i) * x(i);
      }
    }
    best = std::min(best, dist);

    int pos = r - 1;
    while (pos >= 0 && comb[pos] == n - r + pos) --pos;
    if (pos < 0) break;
    ++comb[pos];
    for (int i = pos + 1; i < r; ++i) comb[i] = comb[i - 1] + 1;
  }
  return best;
}

bool projection_suite(std::ostream& os) {
  std::mt19937_64 rng(20240517);
  std::normal_distribution<double> normal(0.0, 2.0);
  int failures = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 7);
    const int r = 1 + static_cast<int>(rng() % 4u) % n;
    const double bound = (trial % 2 == 0) ? 0.5 : 1e6;
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = normal(rng);

    const SparsityBox box{std::min(r, n), bound};
    const Vec p = project_sparsity_box(x, box);
    const double got = (x - p).squaredNorm();
    const double want = brute_force_projection_dist_sq(x, box.sparsity, bound);
    const bool valid = in_sparsity_box(p, box);
    if (!valid || std::abs(got - want) > 1e-12 * std::max(1.0, want)) ++failures;
  }
  os << (failures == 0 ? "ok" : "FAIL") << "  projection vs exhaustive enumeration ("
     << failures << " mismatches)\n";
  return failures == 0;
}

bool merit_suite(std::ostream& os) {
  std::mt19937_64 rng(7151);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SplittingScheme probe;
  probe.f_val = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
  probe.g_val = [](const Vec& z, double) { return z.lpNorm<1>(); };

  int failures = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    IterateTriple st;
    st.u = Vec::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
    st.v = Vec::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
    st.x = Vec::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
    const double gamma = 0.01 + unif(rng);
    const double alpha = 1.5 + 0.5 * unif(rng);
    const MeritBreakdown mb = merit_value(probe, st, gamma, alpha);
    if (mb.max_form_discrepancy > 1e-9 * std::max(1.0, std::abs(mb.value_primary))) ++failures;
  }
  os << (failures == 0 ? "ok" : "FAIL") << "  merit-form equivalence (" << failures
     << " mismatches)\n";
  return failures == 0;
}

bool dr_reduction_suite(std::ostream& os) {
  std::mt19937_64 rng(90210);
  std::normal_distribution<double> normal;
  double worst = 0.0;

  // Sparse least squares, alpha = 2 vs a locally coded DR step.
  {
    const int m = 6, n = 14;
    Mat a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Vec b(m);
    for (int i = 0; i < m; ++i) b(i) = normal(rng);
    SparseLsInstance inst{std::make_shared<Mat>(a), std::make_shared<Vec>(b), SparsityBox{3, 1e6},
                          lambda_max(a).value, true, 0, 0.0};
    const double gamma = 0.9 * gamma_threshold(2.0, inst.lambda_max, 0.0);
    const SplittingScheme scheme = build_sparse_ls(inst, SchemeVariant::pdr(2.0), gamma);

    const Mat lhs = gamma * (a.transpose() * a) + Mat::Identity(n, n);
    const Eigen::LDLT<Mat> solver(lhs);
    IterateTriple ours{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), 0};
    Vec x_ref = Vec::Zero(n);
    for (int step = 0; step < 30; ++step) {
      ours = scheme.step(ours, gamma);
      const Vec u_ref = solver.solve(gamma * (a.transpose() * b) + x_ref);
      const Vec v_ref = project_sparsity_box(2.0 * u_ref - x_ref, inst.box);
      x_ref = x_ref + (v_ref - u_ref);
      worst = std::max(worst, (ours.x - x_ref).lpNorm<Eigen::Infinity>());
    }
  }

  // Feasibility, alpha = 2 vs DR on (1/2) d_C^2.
  {
    const int m = 4, n = 10;
    Mat a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Vec b(m);
    for (int i = 0; i < m; ++i) b(i) = normal(rng);
    FeasibilityInstance inst{std::make_shared<AffineSetHandle>(a, b), SparsityBox{2, 1e6}, 0};
    const double gamma = 0.9 * gamma_threshold(2.0, 1.0, 0.0);
    const SplittingScheme scheme = build_feasibility(inst, SchemeVariant::pdr(2.0), gamma);

    const Eigen::LLT<Mat> gram((a * a.transpose()).eval());
    IterateTriple ours{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), 0};
    Vec x_ref = Vec::Zero(n);
    for (int step = 0; step < 30; ++step) {
      ours = scheme.step(ours, gamma);
      const Vec pc = x_ref + a.transpose() * gram.solve(b - a * x_ref);
      const Vec u_ref = (x_ref + gamma * pc) / (1.0 + gamma);
      const Vec v_ref = project_sparsity_box(2.0 * u_ref - x_ref, inst.box);
      x_ref = x_ref + (v_ref - u_ref);
      worst = std::max(worst, (ours.x - x_ref).lpNorm<Eigen::Infinity>());
    }
  }

  // Completion method 1, alpha = 2 vs DR with a locally coded rank projection.
  {
    const CompletionInstance inst = gen_completion(12, 2, 0.6, 3u);
    const double gamma = 0.9 * gamma_threshold(2.0, 1.0, 0.0);
    const SplittingScheme scheme = build_completion(inst, SchemeVariant::pdr(2.0), gamma);

    IterateTriple ours{Vec::Zero(144), Vec::Zero(144), Vec::Zero(144), 0};
    Mat x_ref = Mat::Zero(12, 12);
    for (int step = 0; step < 30; ++step) {
      ours = scheme.step(ours, gamma);
      Mat u_ref = x_ref;
      for (std::size_t kk = 0; kk < inst.observed.count(); ++kk) {
        const auto i = inst.observed.row_of(kk);
        const auto j = inst.observed.col_of(kk);
        u_ref(i, j) = (x_ref(i, j) + gamma * inst.observed.values[kk]) / (1.0 + gamma);
      }
      const Mat arg = 2.0 * u_ref - x_ref;
      Eigen::BDCSVD<Mat> svd(arg, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Mat v_ref = svd.matrixU().leftCols(2) * svd.singularValues().head(2).asDiagonal() *
                        svd.matrixV().leftCols(2).transpose();
      x_ref = x_ref + (v_ref - u_ref);
      const Mat x_ours = unflatten_row_major(ours.x, 12, 12);
      worst = std::max(worst, (x_ours - x_ref).lpNorm<Eigen::Infinity>());
    }
  }

  const bool ok = worst <= 1e-12;
  os << (ok ? "ok" : "FAIL") << "  alpha=2 reduction to classical DR (max deviation " << worst
     << ")\n";
  return ok;
}

}  // namespace

int run_selftest(std::ostream& os) {
  int failed = 0;
  if (!projection_suite(os)) ++failed;
  if (!merit_suite(os)) ++failed;
  if (!dr_reduction_suite(os)) ++failed;
  os << (failed == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failed;
}

}  // namespace pdrs
