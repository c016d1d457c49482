#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pdrs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/* The (u, v, x) state of a splitting iteration after t completed steps.
 * Matrix-valued problems store their iterates flattened row-major, so the
 * Euclidean norm of a block equals the Frobenius norm of the matrix. */
struct IterateTriple {
  Vec u;
  Vec v;
  Vec x;
  int t = 0;

  bool all_finite() const { return u.allFinite() && v.allFinite() && x.allFinite(); }
};

inline Vec flatten_row_major(const Mat& m) {
  Vec out(m.size());
  const Eigen::Index cols = m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i * cols + j) = m(i, j);
  return out;
}

inline Mat unflatten_row_major(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unflatten_row_major: size mismatch");
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
  return out;
}

enum class Termination { Converged, MaxIter, Diverged };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIter: return "max_iter";
    case Termination::Diverged: return "diverged";
  }
  return "unknown";
}

/* Step-size safeguard parameters: start at gamma = k*gamma0 and shrink toward
 * floor_factor*gamma0 while the iteration shows signs of divergence. */
struct SafeguardConfig {
  double div_coeff = 1000.0;  // divergence test threshold, div_coeff / t
  double inf_cap = 1e10;      // max-norm cap on the monitored block
  double shrink = 0.5;
  double floor_factor = 0.9999;
};

struct PdrConfig {
  double alpha = 2.0;  // reflection coefficient, (3/2, 2]; 2 recovers classical DR
  double k = 1.0;      // gamma inflation factor, gamma starts at k*gamma0
  double tol = 1e-8;
  int max_iter = 20000;
  SafeguardConfig safeguard;

  void validate() const {
    if (!(alpha > 1.5 && alpha <= 2.0))
      throw std::invalid_argument("PdrConfig: alpha must lie in (1.5, 2]");
    if (!(k >= 1.0)) throw std::invalid_argument("PdrConfig: k must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("PdrConfig: tol must be positive");
    if (max_iter <= 0) throw std::invalid_argument("PdrConfig: max_iter must be positive");
    if (!(safeguard.shrink > 0.0 && safeguard.shrink < 1.0))
      throw std::invalid_argument("PdrConfig: safeguard shrink must lie in (0,1)");
    if (!(safeguard.floor_factor > 0.0 && safeguard.floor_factor < 1.0))
      throw std::invalid_argument("PdrConfig: safeguard floor factor must lie in (0,1)");
  }
};

/* Merit value evaluated through its three algebraically identical forms.
 * A large discrepancy between forms indicates an implementation bug. */
struct MeritBreakdown {
  double value_primary = kInf;
  double value_alt1 = kInf;
  double value_alt2 = kInf;
  double max_form_discrepancy = 0.0;
  bool feasible = false;  // false when g(v) = +inf; values are the +inf marker
};

struct GammaEvent {
  int t;         // iteration at which gamma took effect (0 = initial)
  double gamma;
};

struct SolveTrace {
  int iterations = 0;
  IterateTriple final_state;
  std::vector<double> merit_history;     // per step, when recording is enabled
  std::vector<double> residual_history;  // ||v - u|| per step
  std::vector<GammaEvent> gamma_history; // initial value plus each change
  Termination termination = Termination::MaxIter;
  double wall_time = 0.0;  // seconds
  // Norm of grad f(v) + xi with xi the subgradient of g certified by the last
  // v-update; NaN when the scheme does not expose the needed pieces.
  double final_stationarity = kNaN;
};

}  // namespace pdrs
