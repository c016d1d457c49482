#include "pdrs/problems.hpp"

#include <json.hpp>

#include <cmath>

namespace pdrs {

using nlohmann::json;

void CompletionInstance::validate() const {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("CompletionInstance: empty shape");
  if (rank <= 0 || rank > std::min(rows, cols))
    throw std::invalid_argument("CompletionInstance: rank out of range");
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0))
    throw std::invalid_argument("CompletionInstance: sampling ratio must lie in (0, 1]");
  observed.validate();
  if (observed.rows != rows || observed.cols != cols)
    throw std::invalid_argument("CompletionInstance: observed-entry shape mismatch");
  const auto expected =
      static_cast<std::size_t>(std::llround(sampling_ratio * static_cast<double>(rows) * cols));
  if (observed.count() != expected)
    throw std::invalid_argument("CompletionInstance: |Omega| != round(p * n1 * n2)");
}

void SchemeVariant::validate() const {
  switch (kind) {
    case Kind::PdrRegularizedG:
    case Kind::PdrPlainG:
      if (!(alpha > 1.5 && alpha <= 2.0))
        throw std::invalid_argument("SchemeVariant: alpha must lie in (3/2, 2]");
      break;
    case Kind::PrShifted:
      if (!(beta > 2.0)) throw std::invalid_argument("SchemeVariant: beta must exceed 2");
      break;
    default:
      break;
  }
}

double pr_gamma_floor(double beta, double lipschitz) {
  if (!(beta > 2.0)) throw std::invalid_argument("pr_gamma_floor: beta must exceed 2");
  return (beta - 2.0) / ((beta + 1.0) * (beta + 1.0) * lipschitz);
}

double pr_gamma_start(double beta, double lipschitz) { return 0.93 / (beta * lipschitz); }

namespace {

double indicator_with_regularizer(bool member, double norm_sq, double alpha, double gamma) {
  if (!member) return kInf;
  return -0.5 * (2.0 - alpha) / gamma * norm_sq;
}

bool numerically_rank_le(const Mat& z, int r) {
  if (r >= std::min(z.rows(), z.cols())) return true;
  Eigen::BDCSVD<Mat> svd(z);
  const Vec& s = svd.singularValues();
  return s(r) <= 1e-9 * std::max(1.0, s(0));
}

}  // namespace

SplittingScheme build_sparse_ls(const SparseLsInstance& inst, const SchemeVariant& variant,
                                double gamma) {
  variant.validate();
  const auto a = inst.a;
  const auto b = inst.b;
  const SparsityBox box = inst.box;
  const double lip = inst.lambda_max;

  SplittingScheme s;
  s.grad_lipschitz = lip;
  s.weak_convexity = 0.0;
  s.f_val = [a, b](const Vec& z) { return 0.5 * (*a * z - *b).squaredNorm(); };
  s.grad_f = [a, b](const Vec& z) { return Vec(a->transpose() * (*a * z - *b)); };
  s.divergence = {DivergenceMonitor::Block::V, 1.0};

  switch (variant.kind) {
    case SchemeVariant::Kind::PdrRegularizedG: {
      const double alpha = variant.alpha;
      auto prox = std::make_shared<LsProxHandle>(a, b);
      prox->prepare(gamma, 1.0);
      s.alpha = alpha;
      s.merit_enabled = true;
      s.g_val = [box, alpha](const Vec& z, double g) {
        return indicator_with_regularizer(in_sparsity_box(z, box), z.squaredNorm(), alpha, g);
      };
      s.on_gamma_change = [prox](double g) { prox->prepare(g, 1.0); };
      s.step = [prox, box, alpha](const IterateTriple& st, double g) {
        IterateTriple nx;
        nx.u = ls_prox(*prox, st.x, g);
        nx.v = project_sparsity_box((alpha * nx.u - st.x) / (alpha - 1.0), box);
        nx.x = st.x + (nx.v - nx.u);
        nx.t = st.t + 1;
        return nx;
      };
      return s;
    }
    case SchemeVariant::Kind::PrShifted: {
      const double beta = variant.beta;
      if (!(1.0 - beta * lip * gamma > 0.0))
        throw std::invalid_argument("build_sparse_ls: PR requires 1 - beta*L*gamma > 0");
      auto prox = std::make_shared<LsProxHandle>(a, b);
      prox->prepare(gamma, 1.0 + beta * gamma * lip);
      s.alpha = 2.0;
      s.merit_enabled = false;
      s.g_val = [box](const Vec& z, double) { return in_sparsity_box(z, box) ? 0.0 : kInf; };
      s.on_gamma_change = [prox, beta, lip](double g) { prox->prepare(g, 1.0 + beta * g * lip); };
      s.step = [prox, box, beta, lip](const IterateTriple& st, double g) {
        const double scale = 1.0 - beta * lip * g;
        if (!(scale > 0.0))
          throw std::domain_error("PR step: 1 - beta*L*gamma <= 0, v-update undefined");
        if (g != prox->gamma())
          throw StaleFactorization("PR step: handle not prepared for this gamma");
        IterateTriple nx;
        nx.u = prox->apply(st.x);
        nx.v = project_sparsity_box((2.0 * nx.u - st.x) / scale, box);
        nx.x = st.x + 2.0 * (nx.v - nx.u);
        nx.t = st.t + 1;
        return nx;
      };
      return s;
    }
    default:
      throw std::invalid_argument("build_sparse_ls: variant not applicable");
  }
}

SplittingScheme build_feasibility(const FeasibilityInstance& inst, const SchemeVariant& variant,
                                  double gamma) {
  variant.validate();
  const auto affine = inst.affine;
  const SparsityBox box = inst.box;

  SplittingScheme s;
  s.grad_lipschitz = 1.0;  // gradient of (1/2) d_C^2 is 1-Lipschitz
  s.weak_convexity = 0.0;
  s.f_val = [affine](const Vec& z) { return 0.5 * affine->dist_sq(z); };
  s.grad_f = [affine](const Vec& z) { return Vec(z - affine->project(z)); };
  s.divergence = {DivergenceMonitor::Block::V, 1.0};

  switch (variant.kind) {
    case SchemeVariant::Kind::PdrRegularizedG: {
      const double alpha = variant.alpha;
      s.alpha = alpha;
      s.merit_enabled = true;
      s.g_val = [box, alpha](const Vec& z, double g) {
        return indicator_with_regularizer(in_sparsity_box(z, box), z.squaredNorm(), alpha, g);
      };
      s.step = [affine, box, alpha](const IterateTriple& st, double g) {
        IterateTriple nx;
        nx.u = dist_prox(st.x, *affine, g);
        nx.v = project_sparsity_box((alpha * nx.u - st.x) / (alpha - 1.0), box);
        nx.x = st.x + (nx.v - nx.u);
        nx.t = st.t + 1;
        return nx;
      };
      return s;
    }
    case SchemeVariant::Kind::PrShifted: {
      const double beta = variant.beta;
      if (!(1.0 - beta * gamma > 0.0))
        throw std::invalid_argument("build_feasibility: PR requires 1 - beta*gamma > 0");
      s.alpha = 2.0;
      s.merit_enabled = false;
      s.g_val = [box](const Vec& z, double) { return in_sparsity_box(z, box) ? 0.0 : kInf; };
      s.step = [affine, box, beta](const IterateTriple& st, double g) {
        const double scale = 1.0 - beta * g;
        if (!(scale > 0.0))
          throw std::domain_error("PR step: 1 - beta*gamma <= 0, v-update undefined");
        IterateTriple nx;
        nx.u = (g * affine->project(st.x / (1.0 + beta * g)) + st.x) / ((1.0 + beta) * g + 1.0);
        nx.v = project_sparsity_box((2.0 * nx.u - st.x) / scale, box);
        nx.x = st.x + 2.0 * (nx.v - nx.u);
        nx.t = st.t + 1;
        return nx;
      };
      return s;
    }
    default:
      throw std::invalid_argument("build_feasibility: variant not applicable");
  }
}

Vec alternating_projection_step(const FeasibilityInstance& inst, const Vec& x) {
  return project_sparsity_box(inst.affine->project(x), inst.box);
}

SplittingScheme build_alternating_projection(const FeasibilityInstance& inst) {
  const auto affine = inst.affine;
  const SparsityBox box = inst.box;

  SplittingScheme s;
  s.grad_lipschitz = 1.0;
  s.merit_enabled = false;
  s.use_safeguard = false;
  s.f_val = [affine](const Vec& z) { return 0.5 * affine->dist_sq(z); };
  s.grad_f = [affine](const Vec& z) { return Vec(z - affine->project(z)); };
  s.g_val = [box](const Vec& z, double) { return in_sparsity_box(z, box) ? 0.0 : kInf; };
  // u holds the affine-projected point, v = x the sparsified one, so
  // ||v - u|| tracks the gap between the two sets.
  s.step = [affine, box](const IterateTriple& st, double) {
    IterateTriple nx;
    nx.u = affine->project(st.x);
    nx.v = project_sparsity_box(nx.u, box);
    nx.x = nx.v;
    nx.t = st.t + 1;
    return nx;
  };
  return s;
}

bool completion_residual_stop(const ObservedEntries& obs, const Vec& v_flat, double tol) {
  const Mat v = unflatten_row_major(v_flat, obs.rows, obs.cols);
  const double num = omega_residual_norm(v, obs);
  const double den = obs.norm();
  return den > 0.0 ? num < tol * den : num < tol;
}

namespace {

SplittingScheme completion_scheme_base(const CompletionInstance& inst) {
  const ObservedEntries obs = inst.observed;
  const Eigen::Index rows = inst.rows;
  const Eigen::Index cols = inst.cols;

  SplittingScheme s;
  s.grad_lipschitz = 1.0;  // P_Omega is an orthogonal projection
  s.weak_convexity = 0.0;
  s.f_val = [obs, rows, cols](const Vec& z) {
    const double r = omega_residual_norm(unflatten_row_major(z, rows, cols), obs);
    return 0.5 * r * r;
  };
  s.grad_f = [obs, rows, cols](const Vec& z) {
    return flatten_row_major(omega_residual_matrix(unflatten_row_major(z, rows, cols), obs));
  };
  s.stop = [obs](const IterateTriple&, const IterateTriple& cur, double tol) {
    return completion_residual_stop(obs, cur.v, tol);
  };
  // The completion heuristic watches the U block, Frobenius norm over n.
  s.divergence = {DivergenceMonitor::Block::U, static_cast<double>(rows)};
  return s;
}

}  // namespace

SplittingScheme build_completion(const CompletionInstance& inst, const SchemeVariant& variant,
                                 double gamma) {
  variant.validate();
  inst.validate();
  (void)gamma;  // no gamma-keyed factorization: the masked prox is entrywise

  const bool plain = variant.kind == SchemeVariant::Kind::PdrPlainG;
  if (variant.kind != SchemeVariant::Kind::PdrRegularizedG && !plain)
    throw std::invalid_argument("build_completion: variant not applicable");

  const ObservedEntries obs = inst.observed;
  const Eigen::Index rows = inst.rows;
  const Eigen::Index cols = inst.cols;
  const int rank = inst.rank;
  const double alpha = variant.alpha;

  SplittingScheme s = completion_scheme_base(inst);
  s.alpha = alpha;
  s.merit_enabled = true;
  if (plain) {
    s.g_val = [rank, rows, cols](const Vec& z, double) {
      return numerically_rank_le(unflatten_row_major(z, rows, cols), rank) ? 0.0 : kInf;
    };
    s.step = [obs, rows, cols, rank, alpha](const IterateTriple& st, double g) {
      const Mat x = unflatten_row_major(st.x, rows, cols);
      const Mat u = masked_quadratic_prox(x, obs, g);
      const Mat v = project_rank(alpha * u - x, rank);
      IterateTriple nx;
      nx.u = flatten_row_major(u);
      nx.v = flatten_row_major(v);
      nx.x = st.x + (nx.v - nx.u);
      nx.t = st.t + 1;
      return nx;
    };
  } else {
    s.g_val = [rank, rows, cols, alpha](const Vec& z, double g) {
      if (!numerically_rank_le(unflatten_row_major(z, rows, cols), rank)) return kInf;
      return -0.5 * (2.0 - alpha) / g * z.squaredNorm();
    };
    s.step = [obs, rows, cols, rank, alpha](const IterateTriple& st, double g) {
      const Mat x = unflatten_row_major(st.x, rows, cols);
      const Mat u = masked_quadratic_prox(x, obs, g);
      const Mat v = project_rank((alpha * u - x) / (alpha - 1.0), rank);
      IterateTriple nx;
      nx.u = flatten_row_major(u);
      nx.v = flatten_row_major(v);
      nx.x = st.x + (nx.v - nx.u);
      nx.t = st.t + 1;
      return nx;
    };
  }
  return s;
}

Mat svp_step(const CompletionInstance& inst, const Mat& x, int t, Mat* gradient_point) {
  if (t < 1) throw std::invalid_argument("svp_step: t must be >= 1");
  const double eta = 1.0 / (inst.sampling_ratio * std::sqrt(static_cast<double>(t)));
  const Mat y = x - eta * omega_residual_matrix(x, inst.observed);
  if (gradient_point) *gradient_point = y;
  return project_rank(y, inst.rank);
}

SplittingScheme build_svp(const CompletionInstance& inst) {
  inst.validate();
  SplittingScheme s = completion_scheme_base(inst);
  s.merit_enabled = false;
  s.use_safeguard = false;
  const CompletionInstance local = inst;
  s.step = [local](const IterateTriple& st, double) {
    const Mat x = unflatten_row_major(st.x, local.rows, local.cols);
    Mat y;
    const Mat next = svp_step(local, x, st.t + 1, &y);
    IterateTriple nx;
    nx.u = flatten_row_major(y);
    nx.v = flatten_row_major(next);
    nx.x = nx.v;
    nx.t = st.t + 1;
    return nx;
  };
  return s;
}

Mat svt_step(const CompletionInstance& inst, const Mat& x, double tau, double delta, Mat* shrunk) {
  const Mat y = svt_shrink(x, tau);
  if (shrunk) *shrunk = y;
  Mat next = Mat::Zero(x.rows(), x.cols());
  const ObservedEntries& obs = inst.observed;
  for (std::size_t k = 0; k < obs.count(); ++k) {
    const Eigen::Index i = obs.row_of(k);
    const Eigen::Index j = obs.col_of(k);
    next(i, j) = x(i, j) + delta * (obs.values[k] - y(i, j));
  }
  return next;
}

SplittingScheme build_svt(const CompletionInstance& inst, std::optional<double> tau,
                          std::optional<double> delta) {
  inst.validate();
  const double tau_v = tau.value_or(5.0 * static_cast<double>(inst.rows));
  const double delta_v = delta.value_or(1.2 / inst.sampling_ratio);

  SplittingScheme s = completion_scheme_base(inst);
  s.merit_enabled = false;
  s.use_safeguard = false;
  const CompletionInstance local = inst;
  s.step = [local, tau_v, delta_v](const IterateTriple& st, double) {
    const Mat x = unflatten_row_major(st.x, local.rows, local.cols);
    Mat y;
    const Mat next = svt_step(local, x, tau_v, delta_v, &y);
    IterateTriple nx;
    // The shrink output is the solution estimate; x carries the
    // Omega-supported working variable.
    nx.u = flatten_row_major(y);
    nx.v = nx.u;
    nx.x = flatten_row_major(next);
    nx.t = st.t + 1;
    return nx;
  };
  return s;
}

namespace {

void fill_common(RunMetrics& m, const SolveTrace& trace) {
  m.iterations = trace.iterations;
  m.wall_time = trace.wall_time;
  m.termination = trace.termination;
  if (!trace.residual_history.empty()) m.final_residual = trace.residual_history.back();
}

}  // namespace

RunMetrics evaluate_run(const SparseLsInstance& inst, const SolveTrace& trace) {
  RunMetrics m;
  fill_common(m, trace);
  const Vec& v = trace.final_state.v;
  m.fval = v.allFinite() ? 0.5 * (*inst.a * v - *inst.b).squaredNorm() : kInf;
  return m;
}

RunMetrics evaluate_run(const FeasibilityInstance& inst, const SolveTrace& trace) {
  RunMetrics m;
  fill_common(m, trace);
  const Vec& v = trace.final_state.v;
  const double fval = v.allFinite() ? 0.5 * inst.affine->dist_sq(v) : kInf;
  m.fval = fval;
  m.success = fval < kFeasibilitySuccessThreshold;
  return m;
}

RunMetrics evaluate_run(const CompletionInstance& inst, const SolveTrace& trace) {
  RunMetrics m;
  fill_common(m, trace);
  if (inst.ground_truth) {
    const Vec& v = trace.final_state.v;
    if (v.allFinite()) {
      const Mat diff = unflatten_row_major(v, inst.rows, inst.cols) - *inst.ground_truth;
      m.rel_err = diff.norm() / inst.ground_truth->norm();
    } else {
      m.rel_err = kInf;
    }
  }
  return m;
}

namespace {

json mat_to_json(const Mat& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Mat mat_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::invalid_argument("instance json: matrix payload size mismatch");
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[i * cols + j2].get<double>();
  return m;
}

json vec_to_json(const Vec& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

std::string save_instance_json(const SparseLsInstance& inst) {
  json j{{"family", "lsq"},
         {"seed", inst.seed},
         {"noise_level", inst.noise_level},
         {"a", mat_to_json(*inst.a)},
         {"b", vec_to_json(*inst.b)},
         {"sparsity", inst.box.sparsity},
         {"bound", inst.box.bound},
         {"lambda_max", inst.lambda_max}};
  return j.dump();
}

std::string save_instance_json(const FeasibilityInstance& inst) {
  json j{{"family", "feas"},
         {"seed", inst.seed},
         {"a", mat_to_json(inst.affine->matrix())},
         {"b", vec_to_json(inst.affine->rhs())},
         {"sparsity", inst.box.sparsity},
         {"bound", inst.box.bound}};
  return j.dump();
}

std::string save_instance_json(const CompletionInstance& inst) {
  json j{{"family", "complete"},
         {"seed", inst.seed},
         {"rows", inst.rows},
         {"cols", inst.cols},
         {"rank", inst.rank},
         {"p", inst.sampling_ratio},
         {"omega", inst.observed.flat},
         {"values", inst.observed.values}};
  if (inst.ground_truth) j["ground_truth"] = mat_to_json(*inst.ground_truth);
  return j.dump();
}

namespace {

void expect_family(const json& j, const char* family) {
  if (j.at("family").get<std::string>() != family)
    throw std::invalid_argument("instance json: family tag mismatch");
}

}  // namespace

SparseLsInstance load_sparse_ls_json(const std::string& text) {
  const json j = json::parse(text);
  expect_family(j, "lsq");
  SparseLsInstance inst;
  inst.a = std::make_shared<Mat>(mat_from_json(j.at("a")));
  inst.b = std::make_shared<Vec>(vec_from_json(j.at("b")));
  inst.box = {j.at("sparsity").get<int>(), j.at("bound").get<double>()};
  inst.lambda_max = j.at("lambda_max").get<double>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.noise_level = j.at("noise_level").get<double>();
  return inst;
}

FeasibilityInstance load_feasibility_json(const std::string& text) {
  const json j = json::parse(text);
  expect_family(j, "feas");
  FeasibilityInstance inst;
  inst.affine = std::make_shared<AffineSetHandle>(mat_from_json(j.at("a")), vec_from_json(j.at("b")));
  inst.box = {j.at("sparsity").get<int>(), j.at("bound").get<double>()};
  inst.seed = j.at("seed").get<std::uint64_t>();
  return inst;
}

CompletionInstance load_completion_json(const std::string& text) {
  const json j = json::parse(text);
  expect_family(j, "complete");
  CompletionInstance inst;
  inst.rows = j.at("rows").get<Eigen::Index>();
  inst.cols = j.at("cols").get<Eigen::Index>();
  inst.rank = j.at("rank").get<int>();
  inst.sampling_ratio = j.at("p").get<double>();
  inst.observed.rows = inst.rows;
  inst.observed.cols = inst.cols;
  inst.observed.flat = j.at("omega").get<std::vector<std::int64_t>>();
  inst.observed.values = j.at("values").get<std::vector<double>>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("ground_truth"))
    inst.ground_truth = std::make_shared<Mat>(mat_from_json(j.at("ground_truth")));
  inst.validate();
  return inst;
}

}  // namespace pdrs
