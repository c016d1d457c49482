#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pdrs/core.hpp"

#include <cmath>
#include <random>

using namespace pdrs;

namespace {

SplittingScheme value_probe_scheme() {
  SplittingScheme s;
  s.f_val = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
  s.g_val = [](const Vec& z, double) { return z.lpNorm<1>(); };
  return s;
}

/* 1-D smooth-plus-box scheme: f = (u-3)^2/2, g = I_[0,10] with the
 * alpha-cancelling regularizer, so the v-update is a scaled clamp. */
SplittingScheme box_scheme(double alpha) {
  SplittingScheme s;
  s.alpha = alpha;
  s.grad_lipschitz = 1.0;
  s.merit_enabled = true;
  s.f_val = [](const Vec& z) { return 0.5 * (z(0) - 3.0) * (z(0) - 3.0); };
  s.grad_f = [](const Vec& z) { return Vec::Constant(1, z(0) - 3.0); };
  s.g_val = [alpha](const Vec& z, double g) {
    if (z(0) < 0.0 || z(0) > 10.0) return kInf;
    return -0.5 * (2.0 - alpha) / g * z.squaredNorm();
  };
  s.step = [alpha](const IterateTriple& st, double g) {
    IterateTriple nx;
    nx.u = Vec::Constant(1, (st.x(0) + 3.0 * g) / (1.0 + g));
    const double w = (alpha * nx.u(0) - st.x(0)) / (alpha - 1.0);
    nx.v = Vec::Constant(1, std::min(std::max(w, 0.0), 10.0));
    nx.x = st.x + (nx.v - nx.u);
    nx.t = st.t + 1;
    return nx;
  };
  return s;
}

}  // namespace

TEST_CASE("gamma_threshold matches the closed forms and the bisection oracle") {
  // alpha = 2, L = 1, l = 0: sqrt(3/2) - 1.
  CHECK(gamma_threshold(2.0, 1.0) == doctest::Approx(std::sqrt(1.5) - 1.0).epsilon(1e-12));
  // alpha = 1.7: sqrt(2.7/2.3) - 1.
  CHECK(gamma_threshold(1.7, 1.0) ==
        doctest::Approx(std::sqrt(2.7 / 2.3) - 1.0).epsilon(1e-12));
  // l = 0 scales as 1/L.
  CHECK(gamma_threshold(1.9, 5.0) ==
        doctest::Approx((std::sqrt(2.9 / 2.1) - 1.0) / 5.0).epsilon(1e-12));

  // Nonzero weak-convexity modulus: checked against the independent
  // bisection oracle and the sign of h on both sides of the root.
  const double root = gamma_threshold(2.0, 1.0, 1.0);
  CHECK(root == doctest::Approx(oracle::gamma_threshold_by_bisection(2.0, 1.0, 1.0)).epsilon(1e-10));
  CHECK(std::abs(step_size_condition(2.0, root, 1.0, 1.0)) <= 1e-12);
  CHECK(step_size_condition(2.0, 0.99 * root, 1.0, 1.0) < 0.0);
  CHECK(step_size_condition(2.0, 1.01 * root, 1.0, 1.0) > 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = 1.5 + 0.5 * (unif(rng) * 0.999 + 0.001);
    const double lip = 0.1 + 30.0 * unif(rng);
    const double weak = (unif(rng) - 0.5) * lip;
    const double g0 = gamma_threshold(alpha, lip, weak);
    CHECK(g0 > 0.0);
    CHECK(std::abs(step_size_condition(alpha, g0, lip, weak)) <= 1e-12);
    CHECK(g0 == doctest::Approx(oracle::gamma_threshold_by_bisection(alpha, lip, weak))
                    .epsilon(1e-9));
  }

  CHECK_THROWS_AS(gamma_threshold(1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_threshold(1.2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_threshold(1.9, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_threshold(1.9, -2.0), std::invalid_argument);
}

TEST_CASE("descent constant plug-in values") {
  const double g0 = gamma_threshold(2.0, 1.0, 0.0);
  CHECK(descent_constant(2.0, g0, 1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(descent_constant(2.0, 0.1, 1.0, 0.0) == doctest::Approx(2.9).epsilon(1e-12));
  CHECK(descent_constant(1.7, 0.05, 1.0, 0.0) == doctest::Approx(1.6425).epsilon(1e-12));
  // Sign conveys validity of the step-size condition.
  CHECK(descent_constant(2.0, 2.0 * g0, 1.0, 0.0) < 0.0);
}

TEST_CASE("merit forms: identity case is exact") {
  SplittingScheme s;
  s.f_val = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
  s.g_val = [](const Vec&, double) { return 0.0; };
  IterateTriple st;
  st.u = Vec::Constant(2, 1.0);
  st.v = st.u;
  st.x = Vec::Constant(2, -0.7);
  const MeritBreakdown mb = merit_value(s, st, 1.0, 2.0);
  CHECK(mb.feasible);
  CHECK(mb.value_primary == 1.0);  // all extra terms vanish exactly
  CHECK(mb.value_alt2 == 1.0);
}

TEST_CASE("merit forms: hand-evaluated case") {
  SplittingScheme s;
  s.f_val = [](const Vec&) { return 0.0; };
  s.g_val = [](const Vec&, double) { return 0.0; };
  IterateTriple st;
  st.u = Vec::Zero(2);
  st.u(0) = 1.0;
  st.v = Vec::Zero(2);
  st.x = Vec::Zero(2);
  const MeritBreakdown mb = merit_value(s, st, 1.0, 2.0);
  CHECK(mb.value_primary == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mb.value_alt1 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mb.value_alt2 == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("merit forms agree on random tuples") {
  const SplittingScheme s = value_probe_scheme();
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    IterateTriple st;
    st.u = oracle::random_vec(10, rng);
    st.v = oracle::random_vec(10, rng);
    st.x = oracle::random_vec(10, rng);
    const MeritBreakdown mb = merit_value(s, st, 0.1, 1.7);
    CHECK(mb.max_form_discrepancy <= 1e-10 * std::max(1.0, std::abs(mb.value_primary)));
  }
}

TEST_CASE("merit returns the +inf marker off the feasible set") {
  SplittingScheme s;
  s.f_val = [](const Vec&) { return 0.0; };
  s.g_val = [](const Vec&, double) { return kInf; };
  IterateTriple st;
  st.u = st.v = st.x = Vec::Ones(3);
  const MeritBreakdown mb = merit_value(s, st, 1.0, 1.8);
  CHECK_FALSE(mb.feasible);
  CHECK(std::isinf(mb.value_primary));
  CHECK_THROWS_AS(merit_value(s, st, 0.0, 1.8), std::invalid_argument);
}

TEST_CASE("pdr_step: identity proxes give the zero-objective dynamics") {
  const ProxMap id = [](const Vec& z, double) { return z; };
  IterateTriple st;
  st.u = st.v = Vec::Zero(3);
  st.x = Vec::LinSpaced(3, -1.0, 1.0);

  SUBCASE("alpha = 2 makes any x a fixed point") {
    const IterateTriple nx = pdr_step(id, id, st, 0.7, 2.0);
    CHECK(nx.u == st.x);
    CHECK(nx.v == st.x);
    CHECK(nx.x == st.x);
    CHECK(nx.t == st.t + 1);
  }
  SUBCASE("general alpha reflects v to (alpha-1)x") {
    const IterateTriple nx = pdr_step(id, id, st, 0.7, 1.8);
    CHECK((nx.v - 0.8 * st.x).lpNorm<Eigen::Infinity>() <= 1e-15);
  }
  SUBCASE("gamma must be positive") {
    CHECK_THROWS_AS(pdr_step(id, id, st, 0.0, 2.0), std::invalid_argument);
  }
}

TEST_CASE("pdr_step: 1-D quadratic converges to the unconstrained optimum") {
  const double c = 4.0;
  const ProxMap prox_f = [c](const Vec& z, double g) { return Vec((z.array() + g * c) / (1.0 + g)); };
  const ProxMap prox_g = [](const Vec& z, double) { return z; };

  IterateTriple st;
  st.u = st.v = st.x = Vec::Zero(1);
  const IterateTriple first = pdr_step(prox_f, prox_g, st, 1.0, 2.0);
  CHECK(first.u(0) == doctest::Approx(c / 2.0));
  CHECK(first.v(0) == doctest::Approx(c));
  CHECK(first.x(0) == doctest::Approx(c / 2.0));

  IterateTriple it = st;
  for (int k = 0; k < 80; ++k) it = pdr_step(prox_f, prox_g, it, 1.0, 2.0);
  CHECK(std::abs(it.x(0) - c) <= 1e-12);
  CHECK(std::abs(it.u(0) - c) <= 1e-12);
  CHECK(std::abs(it.v(0) - c) <= 1e-12);
}

TEST_CASE("pdr_step with alpha=2 is bitwise identical to a classical DR step") {
  std::mt19937_64 rng(7);
  const ProxMap prox_f = [](const Vec& z, double g) { return Vec(z / (1.0 + g)); };
  const ProxMap prox_g = [](const Vec& z, double g) {
    // soft threshold at g
    Vec out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      out(i) = std::copysign(std::max(std::abs(z(i)) - g, 0.0), z(i));
    return out;
  };

  for (int trial = 0; trial < 100; ++trial) {
    IterateTriple st;
    st.u = oracle::random_vec(8, rng);
    st.v = oracle::random_vec(8, rng);
    st.x = oracle::random_vec(8, rng);
    st.t = trial;
    const double gamma = 0.05 + 0.01 * (trial % 17);

    const IterateTriple ours = pdr_step(prox_f, prox_g, st, gamma, 2.0);

    // Reference DR coded as x + prox_g(2 prox_f(x) - x) - prox_f(x).
    const Vec uf = prox_f(st.x, gamma);
    const Vec vg = prox_g(2.0 * uf - st.x, gamma);
    const Vec x_ref = st.x + (vg - uf);

    CHECK(ours.u == uf);
    CHECK(ours.v == vg);
    CHECK(ours.x == x_ref);
  }
}

TEST_CASE("x-update identity holds bitwise") {
  std::mt19937_64 rng(13);
  const ProxMap prox_f = [](const Vec& z, double g) { return Vec(z / (1.0 + 0.3 * g)); };
  const ProxMap prox_g = [](const Vec& z, double) { return Vec(z.cwiseMax(-1.0).cwiseMin(1.0)); };
  IterateTriple st;
  st.u = st.v = Vec::Zero(12);
  st.x = oracle::random_vec(12, rng);
  for (int k = 0; k < 25; ++k) {
    const IterateTriple nx = pdr_step(prox_f, prox_g, st, 0.4, 1.9);
    for (Eigen::Index i = 0; i < nx.x.size(); ++i)
      CHECK(nx.x(i) == st.x(i) + (nx.v(i) - nx.u(i)));
    st = nx;
  }
}

TEST_CASE("relative_change_stop") {
  IterateTriple prev, cur;
  prev.u = prev.v = prev.x = Vec::Zero(3);
  prev.t = 4;
  cur = prev;
  cur.t = 5;

  SUBCASE("zero change stops for any tolerance") {
    CHECK(relative_change_stop(prev, cur, 1e-300));
  }
  SUBCASE("denominator clamps at one") {
    cur.u = Vec::Constant(3, 1e-9 / std::sqrt(3.0));
    CHECK(relative_change_stop(prev, cur, 1e-8));
  }
  SUBCASE("change above tolerance does not stop") {
    prev.u = Vec::Constant(3, 0.5);  // norms below 1, denominator still 1
    cur = prev;
    cur.t = 5;
    cur.x = prev.x + Vec::Constant(3, 2e-8 / std::sqrt(3.0));
    CHECK_FALSE(relative_change_stop(prev, cur, 1e-8));
  }
}

TEST_CASE("gamma_safeguard") {
  SafeguardConfig cfg;
  const double gamma0 = 0.2;

  SUBCASE("below the threshold the guard never fires") {
    CHECK(gamma_safeguard(0.5 * gamma0, gamma0, 1e9, 1e20, 1, cfg) == 0.5 * gamma0);
  }
  SUBCASE("divergence halves gamma") {
    const Vec v_prev = Vec::Zero(4);
    const Vec v_cur = Vec::Constant(4, 1000.0);  // ||dv|| = 2000 > 1000/1
    CHECK(gamma_safeguard(50.0 * gamma0, gamma0, v_cur, v_prev, 1, cfg) ==
          doctest::Approx(25.0 * gamma0));
  }
  SUBCASE("floor engages and then the guard is dead") {
    const double next = gamma_safeguard(1.5 * gamma0, gamma0, 2000.0, 0.0, 1, cfg);
    CHECK(next == doctest::Approx(0.9999 * gamma0));
    CHECK(gamma_safeguard(next, gamma0, 1e12, 1e20, 1, cfg) == next);
  }
  SUBCASE("no divergence signal, no change") {
    CHECK(gamma_safeguard(50.0 * gamma0, gamma0, 1.0, 1.0, 10, cfg) == 50.0 * gamma0);
  }
  SUBCASE("max-norm cap alone triggers") {
    CHECK(gamma_safeguard(4.0 * gamma0, gamma0, 0.0, 2e10, 5, cfg) ==
          doctest::Approx(2.0 * gamma0));
  }
}

TEST_CASE("run_solver: zero objective converges at t = 1") {
  SplittingScheme s;
  s.alpha = 2.0;
  s.merit_enabled = false;
  s.use_safeguard = false;
  s.f_val = [](const Vec&) { return 0.0; };
  s.g_val = [](const Vec&, double) { return 0.0; };
  s.step = [](const IterateTriple& st, double) {
    IterateTriple nx;
    nx.u = st.x;
    nx.v = st.x;
    nx.x = st.x;
    nx.t = st.t + 1;
    return nx;
  };
  PdrConfig cfg;
  cfg.max_iter = 50;
  const SolveTrace trace = run_solver(s, Vec::Constant(4, 2.5), cfg, 1.0);
  CHECK(trace.termination == Termination::Converged);
  CHECK(trace.iterations == 1);
  CHECK(trace.residual_history.size() == 1);
}

TEST_CASE("run_solver: 1-D box problem converges to the interior optimum") {
  const double alpha = 1.9;
  const SplittingScheme s = box_scheme(alpha);
  const double gamma0 = gamma_threshold(alpha, 1.0, 0.0);
  PdrConfig cfg;
  cfg.alpha = alpha;
  cfg.k = 1.0;
  cfg.max_iter = 5000;
  const SolveTrace trace = run_solver(s, Vec::Zero(1), cfg, gamma0, true);

  CHECK(trace.termination == Termination::Converged);
  CHECK(std::abs(trace.final_state.u(0) - 3.0) <= 1e-5);
  CHECK(std::abs(trace.final_state.v(0) - 3.0) <= 1e-5);
  CHECK(s.f_val(trace.final_state.u) <= 1e-10);
  CHECK(static_cast<int>(trace.merit_history.size()) == trace.iterations);
  // Recorded merit is nonincreasing at gamma = gamma0.
  for (std::size_t i = 1; i < trace.merit_history.size(); ++i)
    CHECK(trace.merit_history[i] <=
          trace.merit_history[i - 1] + 1e-10 * std::max(1.0, std::abs(trace.merit_history[i])));
  // First-order residual of the v-update is tiny at the solution.
  CHECK(trace.final_stationarity <= 1e-4);
}

TEST_CASE("run_solver: safeguard shrinks gamma to the floor, then goes quiet") {
  // Synthetic scheme whose v block keeps jumping by more than div_coeff/t.
  SplittingScheme s;
  s.merit_enabled = false;
  s.f_val = [](const Vec&) { return 0.0; };
  s.g_val = [](const Vec&, double) { return 0.0; };
  s.step = [](const IterateTriple& st, double) {
    IterateTriple nx;
    nx.u = st.u;
    nx.v = st.v + Vec::Constant(2, 1500.0);
    nx.x = st.x;
    nx.t = st.t + 1;
    return nx;
  };
  PdrConfig cfg;
  cfg.k = 50.0;
  cfg.max_iter = 30;
  const double gamma0 = 1.0;
  const SolveTrace trace = run_solver(s, Vec::Zero(2), cfg, gamma0);

  CHECK(trace.termination == Termination::MaxIter);
  REQUIRE(trace.gamma_history.size() >= 7);
  CHECK(trace.gamma_history[0].gamma == 50.0);
  CHECK(trace.gamma_history[1].gamma == 25.0);
  CHECK(trace.gamma_history.back().gamma == doctest::Approx(0.9999));
  // Once at the floor the guard never fires again.
  CHECK(trace.gamma_history.size() == 7);
}

TEST_CASE("run_solver: non-finite iterates terminate as Diverged") {
  SplittingScheme s;
  s.merit_enabled = false;
  s.use_safeguard = false;
  s.f_val = [](const Vec&) { return 0.0; };
  s.g_val = [](const Vec&, double) { return 0.0; };
  s.step = [](const IterateTriple& st, double) {
    IterateTriple nx;
    nx.u = st.u;
    nx.v = st.v;
    nx.x = st.t >= 2 ? Vec::Constant(2, kNaN) : st.x + Vec::Ones(2);
    nx.t = st.t + 1;
    return nx;
  };
  PdrConfig cfg;
  cfg.max_iter = 100;
  const SolveTrace trace = run_solver(s, Vec::Zero(2), cfg, 0.0);
  CHECK(trace.termination == Termination::Diverged);
  CHECK(trace.iterations == 3);
}

TEST_CASE("run_solver: observer sees every step with the gamma in effect") {
  const SplittingScheme s = box_scheme(1.8);
  const double gamma0 = gamma_threshold(1.8, 1.0, 0.0);
  PdrConfig cfg;
  cfg.alpha = 1.8;
  cfg.max_iter = 40;
  RunOptions opts;
  opts.gamma_init = 0.9 * gamma0;
  int calls = 0;
  opts.observer = [&](const IterateTriple& prev, const IterateTriple& cur, double gamma) {
    CHECK(cur.t == prev.t + 1);
    CHECK(gamma == doctest::Approx(0.9 * gamma0));
    ++calls;
  };
  const SolveTrace trace = run_solver(s, Vec::Zero(1), cfg, gamma0, false, opts);
  CHECK(calls == trace.iterations);
}
