/* Parameterized Douglas-Rachford splitting core: the generic iteration
 * driver, the step-size threshold gamma0, the merit-function diagnostics and
 * the gamma safeguard heuristic. Everything here is independent of any
 * concrete problem family; problems plug in through SplittingScheme.
 *
 * The iteration solves min f(u) + g(u) with f smooth (grad f Lipschitz with
 * modulus L) and g proper closed, via
 *
 *   u' = prox_{gamma f}(x)
 *   v' = prox_{gamma g}(alpha*u' - x)
 *   x' = x + (v' - u'),        alpha in (3/2, 2], alpha = 2 is classical DR.
 */
#pragma once

#include "pdrs/types.hpp"

#include <functional>

namespace pdrs {

/* Raised when the three merit forms disagree beyond rounding: a bug in the
 * evaluator or in the scheme's value oracles, never a user error. */
struct FormMismatch : std::logic_error {
  using std::logic_error::logic_error;
};

/* Which block the safeguard watches for divergence. The sparse-LS and
 * feasibility heuristics monitor the second block (v); the matrix-completion
 * heuristic monitors the first block (u) with its Frobenius norm divided by
 * the matrix side length. */
struct DivergenceMonitor {
  enum class Block { U, V };
  Block block = Block::V;
  double norm_scale = 1.0;  // ||delta block|| / norm_scale is tested against div_coeff/t
};

/* One solver scheme: a step map plus the value oracles the driver needs for
 * diagnostics. Immutable after construction except for gamma-keyed
 * factorization caches, which are confined to a single run. */
struct SplittingScheme {
  // Advances the state by one iteration under the given step size.
  std::function<IterateTriple(const IterateTriple&, double gamma)> step;
  // Smooth part; finite everywhere.
  std::function<double(const Vec&)> f_val;
  // The g actually iterated on (indicator plus any step-size dependent
  // regularizer); +inf exactly off the feasible set for indicator-type g.
  std::function<double(const Vec&, double gamma)> g_val;
  std::function<Vec(const Vec&)> grad_f;

  double grad_lipschitz = 1.0;  // L, Lipschitz modulus of grad f
  double weak_convexity = 0.0;  // l, with f + (l/2)||.||^2 convex

  // Reflection coefficient used by the merit evaluator; meaningful for PDR
  // schemes only.
  double alpha = 2.0;
  // Off for PR/ALT/SVP/SVT where the alpha-merit is not the relevant
  // Lyapunov function.
  bool merit_enabled = false;
  bool use_safeguard = true;
  DivergenceMonitor divergence;

  // Called whenever the driver changes gamma, before the next step, so
  // gamma-keyed factorizations can be rebuilt.
  std::function<void(double gamma)> on_gamma_change;
  // Custom termination rule; empty means the relative-change rule.
  std::function<bool(const IterateTriple& prev, const IterateTriple& cur, double tol)> stop;
};

/* h(gamma) from the step-size condition: the merit sequence descends whenever
 *
 *   h(gamma) = (4-alpha)/2 (1+gamma L)^2 + (9-2alpha)/2 gamma l - (1+alpha)/2 < 0.
 */
double step_size_condition(double alpha, double gamma, double lipschitz, double weak_convexity);

/* Largest step size with h < 0: the positive root of the quadratic
 * a g^2 + b g + c with a = (4-alpha)L^2/2, b = (4-alpha)L + (9-2alpha)l/2,
 * c = (3-2alpha)/2. Exists for alpha in (3/2, 2] since h(0) = c < 0.
 * Throws std::invalid_argument for alpha outside (3/2, 2] or L <= 0, and
 * std::logic_error if |h(root)| > 1e-12 (arithmetic self-check). */
double gamma_threshold(double alpha, double lipschitz, double weak_convexity = 0.0);

/* Descent constant A = -h(gamma)/gamma: consecutive merit values satisfy
 * M_t - M_{t+1} >= A ||u^{t+1} - u^t||^2. Positive exactly when h(gamma) < 0. */
double descent_constant(double alpha, double gamma, double lipschitz, double weak_convexity);

/* Merit value M_gamma(u, v, x) evaluated through its three forms:
 *
 *   primary: f(u) + g(v) - 1/(2g)||u-v||^2 + 1/g <x-(a-1)u, v-u> + (2-a)/(2g)||u||^2
 *   alt1:    ... + 1/(2g)||a u - v - x||^2 - 1/(2g)||x-(a-1)u||^2 - 1/g||u-v||^2 ...
 *   alt2:    ... + 1/(2g)(||x-u||^2 - ||x-v||^2) + 1/g <(2-a)u, v-u> ...
 *
 * Returns the +inf marker when g(v) = +inf. Throws FormMismatch when the
 * forms disagree beyond 1e-6 * max(1, |primary|). */
MeritBreakdown merit_value(const SplittingScheme& scheme, const IterateTriple& state,
                           double gamma, double alpha);

using ProxMap = std::function<Vec(const Vec&, double gamma)>;

/* One PDR step from explicit prox maps; the building block for PDR schemes
 * and for reference-equivalence tests. */
IterateTriple pdr_step(const ProxMap& prox_f, const ProxMap& prox_g, const IterateTriple& state,
                       double gamma, double alpha);

/* Relative-change termination:
 * max{||du||,||dv||,||dx||} / max{||u||,||v||,||x||, 1} < tol,
 * norms taken at the previous iterate. */
bool relative_change_stop(const IterateTriple& prev, const IterateTriple& cur, double tol);

/* Step-size safeguard: returns max{shrink*gamma, floor_factor*gamma0} when
 * both gamma > gamma0 and a divergence signal fires (block change above
 * div_coeff/t, or block max-norm above inf_cap); otherwise gamma unchanged.
 * Once gamma <= gamma0 the guard can never fire again. */
double gamma_safeguard(double gamma, double gamma0, double diff_norm, double inf_norm, int t,
                       const SafeguardConfig& cfg);

/* Convenience overload on the monitored block itself (unscaled). */
double gamma_safeguard(double gamma, double gamma0, const Vec& v_cur, const Vec& v_prev, int t,
                       const SafeguardConfig& cfg);

struct RunOptions {
  // Overrides the default initial step size k*gamma0 when positive (the PR
  // baselines start at 0.93/(beta L) rather than a multiple of their floor).
  double gamma_init = 0.0;
  // Invoked after every step with the state pair and the gamma used for it.
  std::function<void(const IterateTriple& prev, const IterateTriple& cur, double gamma)> observer;
};

/* Runs a scheme from x0 until the stop rule fires or max_iter is reached.
 * gamma starts at k*gamma0 (or opts.gamma_init), and the safeguard shrinks it
 * toward floor_factor*gamma0; pass gamma0 <= 0 for schemes without a step
 * size. Non-finite iterates terminate the run as Diverged. */
SolveTrace run_solver(const SplittingScheme& scheme, const Vec& x0, const PdrConfig& cfg,
                      double gamma0, bool record_merit = false, const RunOptions& opts = {});

/* Lemma-style bound check used by the diagnostics tests:
 * ||x^t - x^{t-1}|| <= (1 + gamma L) ||u^{t+1} - u^t|| + slack. */
inline bool lipschitz_chain_bound_holds(double dx_norm, double du_next_norm, double gamma,
                                        double lipschitz, double slack = 1e-10) {
  return dx_norm <= (1.0 + gamma * lipschitz) * du_next_norm + slack;
}

}  // namespace pdrs
