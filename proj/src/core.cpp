#include "pdrs/core.hpp"

#include <cassert>
#include <chrono>
#include <cmath>

namespace pdrs {

double step_size_condition(double alpha, double gamma, double lipschitz, double weak_convexity) {
  const double w = 1.0 + gamma * lipschitz;
  return 0.5 * (4.0 - alpha) * w * w + 0.5 * (9.0 - 2.0 * alpha) * gamma * weak_convexity -
         0.5 * (1.0 + alpha);
}

double gamma_threshold(double alpha, double lipschitz, double weak_convexity) {
  if (!(alpha > 1.5 && alpha <= 2.0))
    throw std::invalid_argument("gamma_threshold: alpha must lie in (3/2, 2], h(0) >= 0 otherwise");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("gamma_threshold: L must be positive");

  const double a = 0.5 * (4.0 - alpha) * lipschitz * lipschitz;
  const double b = (4.0 - alpha) * lipschitz + 0.5 * (9.0 - 2.0 * alpha) * weak_convexity;
  const double c = 0.5 * (3.0 - 2.0 * alpha);
  // a > 0 and c < 0, so the discriminant is positive and there is exactly one
  // positive root; h < 0 on (0, root).
  const double root = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);

  const double residual = step_size_condition(alpha, root, lipschitz, weak_convexity);
  if (!(std::abs(residual) <= 1e-12))
    throw std::logic_error("gamma_threshold: closed-form root does not satisfy h(gamma0) = 0");
  return root;
}

double descent_constant(double alpha, double gamma, double lipschitz, double weak_convexity) {
  return -step_size_condition(alpha, gamma, lipschitz, weak_convexity) / gamma;
}

MeritBreakdown merit_value(const SplittingScheme& scheme, const IterateTriple& state, double gamma,
                           double alpha) {
  if (!(gamma > 0.0)) throw std::invalid_argument("merit_value: gamma must be positive");

  const double gv = scheme.g_val(state.v, gamma);
  if (!std::isfinite(gv)) return MeritBreakdown{};  // +inf marker

  const double fu = scheme.f_val(state.u);
  const Vec& u = state.u;
  const Vec& v = state.v;
  const Vec& x = state.x;
  const double ig = 1.0 / gamma;
  const double base = fu + gv;
  const double reg = 0.5 * (2.0 - alpha) * ig * u.squaredNorm();

  MeritBreakdown out;
  out.feasible = true;
  out.value_primary = base - 0.5 * ig * (u - v).squaredNorm() +
                      ig * (x - (alpha - 1.0) * u).dot(v - u) + reg;
  out.value_alt1 = base + 0.5 * ig * (alpha * u - v - x).squaredNorm() -
                   0.5 * ig * (x - (alpha - 1.0) * u).squaredNorm() - ig * (u - v).squaredNorm() +
                   reg;
  out.value_alt2 = base + 0.5 * ig * ((x - u).squaredNorm() - (x - v).squaredNorm()) +
                   ig * (2.0 - alpha) * u.dot(v - u) + reg;

  const double d01 = std::abs(out.value_primary - out.value_alt1);
  const double d02 = std::abs(out.value_primary - out.value_alt2);
  const double d12 = std::abs(out.value_alt1 - out.value_alt2);
  out.max_form_discrepancy = std::max({d01, d02, d12});

  if (out.max_form_discrepancy > 1e-6 * std::max(1.0, std::abs(out.value_primary)))
    throw FormMismatch("merit_value: the three merit forms disagree beyond rounding");
  return out;
}

IterateTriple pdr_step(const ProxMap& prox_f, const ProxMap& prox_g, const IterateTriple& state,
                       double gamma, double alpha) {
  if (!(gamma > 0.0)) throw std::invalid_argument("pdr_step: gamma must be positive");
  IterateTriple next;
  next.u = prox_f(state.x, gamma);
  next.v = prox_g(alpha * next.u - state.x, gamma);
  next.x = state.x + (next.v - next.u);
  next.t = state.t + 1;
  return next;
}

bool relative_change_stop(const IterateTriple& prev, const IterateTriple& cur, double tol) {
  assert(prev.t + 1 == cur.t);
  const double change =
      std::max({(cur.u - prev.u).norm(), (cur.v - prev.v).norm(), (cur.x - prev.x).norm()});
  const double scale = std::max({prev.u.norm(), prev.v.norm(), prev.x.norm(), 1.0});
  return change / scale < tol;
}

double gamma_safeguard(double gamma, double gamma0, double diff_norm, double inf_norm, int t,
                       const SafeguardConfig& cfg) {
  if (!(gamma > gamma0)) return gamma;
  const bool diverging = diff_norm > cfg.div_coeff / static_cast<double>(t) || inf_norm > cfg.inf_cap;
  if (!diverging) return gamma;
  return std::max(cfg.shrink * gamma, cfg.floor_factor * gamma0);
}

double gamma_safeguard(double gamma, double gamma0, const Vec& v_cur, const Vec& v_prev, int t,
                       const SafeguardConfig& cfg) {
  return gamma_safeguard(gamma, gamma0, (v_cur - v_prev).norm(),
                         v_cur.lpNorm<Eigen::Infinity>(), t, cfg);
}

namespace {

double monitored_diff_norm(const SplittingScheme& scheme, const IterateTriple& prev,
                           const IterateTriple& cur) {
  const bool on_u = scheme.divergence.block == DivergenceMonitor::Block::U;
  const Vec& a = on_u ? cur.u : cur.v;
  const Vec& b = on_u ? prev.u : prev.v;
  return (a - b).norm() / scheme.divergence.norm_scale;
}

double monitored_inf_norm(const SplittingScheme& scheme, const IterateTriple& cur) {
  const bool on_u = scheme.divergence.block == DivergenceMonitor::Block::U;
  return (on_u ? cur.u : cur.v).lpNorm<Eigen::Infinity>();
}

}  // namespace

SolveTrace run_solver(const SplittingScheme& scheme, const Vec& x0, const PdrConfig& cfg,
                      double gamma0, bool record_merit, const RunOptions& opts) {
  cfg.validate();
  if (!x0.allFinite()) throw std::invalid_argument("run_solver: x0 must be finite");

  const auto t_begin = std::chrono::steady_clock::now();
  SolveTrace trace;
  auto finish = [&](Termination why, const IterateTriple& prev, const IterateTriple& last,
                    double gamma) {
    trace.termination = why;
    trace.iterations = last.t;
    if (scheme.merit_enabled && scheme.grad_f && gamma > 0.0 && last.t > 0) {
      // xi = (alpha u - x_prev - v)/gamma is the subgradient of g certified
      // by the v-update's optimality condition.
      const Vec xi = (scheme.alpha * last.u - prev.x - last.v) / gamma;
      trace.final_stationarity = (scheme.grad_f(last.v) + xi).norm();
    }
    trace.final_state = last;
    trace.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return trace;
  };

  double gamma = opts.gamma_init > 0.0 ? opts.gamma_init : cfg.k * gamma0;
  if (scheme.on_gamma_change) scheme.on_gamma_change(gamma);
  trace.gamma_history.push_back({0, gamma});

  // Seed state: x0 in every block so the first step's change test and the
  // safeguard are well defined; u and v are overwritten by the first step.
  IterateTriple prev{x0, x0, x0, 0};
  const bool merit_on = record_merit && scheme.merit_enabled;

  for (int step = 1; step <= cfg.max_iter; ++step) {
    IterateTriple cur = scheme.step(prev, gamma);
    assert(cur.t == prev.t + 1);
    if (!cur.all_finite()) return finish(Termination::Diverged, prev, cur, gamma);

    trace.residual_history.push_back((cur.v - cur.u).norm());
    if (merit_on) trace.merit_history.push_back(merit_value(scheme, cur, gamma, scheme.alpha).value_primary);
    if (opts.observer) opts.observer(prev, cur, gamma);

    if (scheme.use_safeguard && gamma0 > 0.0) {
      const double next_gamma =
          gamma_safeguard(gamma, gamma0, monitored_diff_norm(scheme, prev, cur),
                          monitored_inf_norm(scheme, cur), cur.t, cfg.safeguard);
      if (next_gamma != gamma) {
        gamma = next_gamma;
        trace.gamma_history.push_back({cur.t, gamma});
        if (scheme.on_gamma_change) scheme.on_gamma_change(gamma);
      }
    }

    const bool done = scheme.stop ? scheme.stop(prev, cur, cfg.tol)
                                  : relative_change_stop(prev, cur, cfg.tol);
    if (done) return finish(Termination::Converged, prev, cur, gamma);

    if (step == cfg.max_iter) return finish(Termination::MaxIter, prev, cur, gamma);
    prev = std::move(cur);
  }
  return finish(Termination::MaxIter, prev, prev, gamma);  // unreachable for max_iter >= 1
}

}  // namespace pdrs
