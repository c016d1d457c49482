#include "pdrs/bench.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace pdrs {

using nlohmann::json;

const char* family_tag(Family f) {
  switch (f) {
    case Family::SparseLs: return "lsq";
    case Family::Feasibility: return "feas";
    case Family::Completion: return "complete";
  }
  return "unknown";
}

double default_k(Family family, SchemeVariant::Kind kind) {
  if (kind == SchemeVariant::Kind::PdrPlainG) return 1e6;
  switch (family) {
    case Family::SparseLs: return 50.0;
    case Family::Feasibility: return 150.0;
    case Family::Completion: return 150.0;
  }
  return 1.0;
}

double default_tol(Family family) { return family == Family::Completion ? 1e-4 : 1e-8; }

int default_max_iter(Family family) { return family == Family::Completion ? 2000 : 20000; }

std::vector<VariantSpec> default_variants(Family family, const std::vector<double>& alphas,
                                          double beta) {
  std::vector<VariantSpec> out;
  out.push_back({SchemeVariant::pdr(2.0), "dr"});
  switch (family) {
    case Family::SparseLs:
      out.push_back({SchemeVariant::pr(beta), "pr"});
      break;
    case Family::Feasibility:
      out.push_back({SchemeVariant::pr(beta), "pr"});
      out.push_back({SchemeVariant::alternating(), "alt"});
      break;
    case Family::Completion:
      out.push_back({SchemeVariant::svp(), "svp"});
      out.push_back({SchemeVariant::svt(), "svt"});
      break;
  }
  for (const double a : alphas) out.push_back({SchemeVariant::pdr(a), "pdr"});
  return out;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
  if (variants.empty()) throw std::invalid_argument("ExperimentConfig: no variants selected");
  if (workers < 1) throw std::invalid_argument("ExperimentConfig: workers must be >= 1");
  if (k && !(*k >= 1.0)) throw std::invalid_argument("ExperimentConfig: k must be >= 1");
  if (tol && !(*tol > 0.0)) throw std::invalid_argument("ExperimentConfig: tol must be positive");
  if (max_iter && *max_iter < 1)
    throw std::invalid_argument("ExperimentConfig: max_iter must be positive");
  for (const auto& v : variants) v.variant.validate();
  if (family == Family::Completion) {
    if (n_values.empty() || rank_values.empty() || p_values.empty())
      throw std::invalid_argument("ExperimentConfig: completion needs n, rank and p grids");
    for (const auto& v : variants)
      if (v.variant.kind == SchemeVariant::Kind::PrShifted ||
          v.variant.kind == SchemeVariant::Kind::AlternatingProjection)
        throw std::invalid_argument("ExperimentConfig: variant not applicable to completion");
  } else {
    if (m_values.empty() || n_values.empty())
      throw std::invalid_argument("ExperimentConfig: m and n grids must be nonempty");
    for (const auto& v : variants)
      if (v.variant.kind == SchemeVariant::Kind::PdrPlainG ||
          v.variant.kind == SchemeVariant::Kind::Svp || v.variant.kind == SchemeVariant::Kind::Svt)
        throw std::invalid_argument("ExperimentConfig: variant not applicable to this family");
    if (family == Family::SparseLs)
      for (const auto& v : variants)
        if (v.variant.kind == SchemeVariant::Kind::AlternatingProjection)
          throw std::invalid_argument("ExperimentConfig: alternating projections is feasibility-only");
  }
}

GammaPlan gamma_plan(const SchemeVariant& variant, double lipschitz, double k) {
  switch (variant.kind) {
    case SchemeVariant::Kind::PdrRegularizedG:
    case SchemeVariant::Kind::PdrPlainG: {
      const double floor = gamma_threshold(variant.alpha, lipschitz, 0.0);
      return {floor, k * floor};
    }
    case SchemeVariant::Kind::PrShifted:
      return {pr_gamma_floor(variant.beta, lipschitz), pr_gamma_start(variant.beta, lipschitz)};
    default:
      return {0.0, 0.0};  // no step size
  }
}

namespace {

PdrConfig make_config(const SchemeVariant& variant, double tol, int max_iter) {
  PdrConfig cfg;
  cfg.alpha = (variant.kind == SchemeVariant::Kind::PdrRegularizedG ||
               variant.kind == SchemeVariant::Kind::PdrPlainG)
                  ? variant.alpha
                  : 2.0;
  cfg.k = 1.0;  // the start value is always passed explicitly
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  return cfg;
}

RunMetrics run_built(const SplittingScheme& scheme, Eigen::Index dim, const GammaPlan& plan,
                     const PdrConfig& cfg, SolveTrace* trace_out, const auto& inst) {
  RunOptions opts;
  opts.gamma_init = plan.start;
  const SolveTrace trace = run_solver(scheme, Vec::Zero(dim), cfg, plan.floor, false, opts);
  if (trace_out) *trace_out = trace;
  return evaluate_run(inst, trace);
}

}  // namespace

RunMetrics run_one(const SparseLsInstance& inst, const SchemeVariant& variant, double k,
                   double tol, int max_iter, SolveTrace* trace_out) {
  const GammaPlan plan = gamma_plan(variant, inst.lambda_max, k);
  const SplittingScheme scheme = build_sparse_ls(inst, variant, plan.start);
  return run_built(scheme, inst.a->cols(), plan, make_config(variant, tol, max_iter), trace_out,
                   inst);
}

RunMetrics run_one(const FeasibilityInstance& inst, const SchemeVariant& variant, double k,
                   double tol, int max_iter, SolveTrace* trace_out) {
  const GammaPlan plan = gamma_plan(variant, 1.0, k);
  const SplittingScheme scheme = variant.kind == SchemeVariant::Kind::AlternatingProjection
                                     ? build_alternating_projection(inst)
                                     : build_feasibility(inst, variant, plan.start);
  return run_built(scheme, inst.affine->cols(), plan, make_config(variant, tol, max_iter),
                   trace_out, inst);
}

RunMetrics run_one(const CompletionInstance& inst, const SchemeVariant& variant, double k,
                   double tol, int max_iter, SolveTrace* trace_out) {
  const GammaPlan plan = gamma_plan(variant, 1.0, k);
  SplittingScheme scheme;
  switch (variant.kind) {
    case SchemeVariant::Kind::Svp: scheme = build_svp(inst); break;
    case SchemeVariant::Kind::Svt: scheme = build_svt(inst); break;
    default: scheme = build_completion(inst, variant, plan.start); break;
  }
  return run_built(scheme, inst.rows * inst.cols, plan, make_config(variant, tol, max_iter),
                   trace_out, inst);
}

namespace {

struct Cell {
  int m = -1, n = -1, rank = -1;
  double p = kNaN;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  if (cfg.family == Family::Completion) {
    for (int n : cfg.n_values)
      for (int r : cfg.rank_values)
        for (double p : cfg.p_values) cells.push_back({-1, n, r, p});
  } else {
    for (int m : cfg.m_values)
      for (int n : cfg.n_values) cells.push_back({m, n, -1, kNaN});
  }
  return cells;
}

bool is_pdr_kind(SchemeVariant::Kind kind) {
  return kind == SchemeVariant::Kind::PdrRegularizedG || kind == SchemeVariant::Kind::PdrPlainG;
}

TableRow aggregate(const ExperimentConfig& cfg, const Cell& cell, const VariantSpec& spec,
                   const std::vector<RunRecord>& runs) {
  TableRow row;
  row.family = cfg.family;
  row.m = cell.m;
  row.n = cell.n;
  row.rank = cell.rank;
  row.p = cell.p;
  row.variant = spec.label;
  if (is_pdr_kind(spec.variant.kind)) row.alpha = spec.variant.alpha;
  row.trials = static_cast<int>(runs.size());

  double iter_sum = 0.0, time_sum = 0.0;
  double fval_sum = 0.0, fval_max = -kInf, fval_min = kInf;
  bool any_fval = false;
  int succ = 0;
  bool any_success_field = false;
  double iter_succ_sum = 0.0, time_succ_sum = 0.0;
  double rel_sum = 0.0;
  int rel_count = 0;

  for (const RunRecord& rec : runs) {
    const RunMetrics& m = rec.metrics;
    iter_sum += m.iterations;
    time_sum += m.wall_time;
    if (m.fval) {
      any_fval = true;
      fval_sum += *m.fval;
      fval_max = std::max(fval_max, *m.fval);
      fval_min = std::min(fval_min, *m.fval);
    }
    if (m.success) {
      any_success_field = true;
      if (*m.success) {
        ++succ;
        iter_succ_sum += m.iterations;
        time_succ_sum += m.wall_time;
      }
    }
    if (m.rel_err) {
      rel_sum += *m.rel_err;
      ++rel_count;
    }
  }

  const double trials = static_cast<double>(runs.size());
  row.iter_mean = iter_sum / trials;
  row.time_mean = time_sum / trials;
  if (any_fval) {
    row.fval_mean = fval_sum / trials;
    row.fval_max = fval_max;
    row.fval_min = fval_min;
  }
  if (any_success_field) {
    row.succ = succ;
    row.fail = static_cast<int>(runs.size()) - succ;
    if (succ > 0) {
      row.iter_succ_mean = iter_succ_sum / succ;
      row.time_succ_mean = time_succ_sum / succ;
    }
  }
  if (rel_count > 0) row.rel_err_mean = rel_sum / rel_count;
  if (cfg.keep_runs) row.runs = runs;
  return row;
}

}  // namespace

RunTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<Cell> cells = enumerate_cells(cfg);
  const double tol = cfg.tol.value_or(default_tol(cfg.family));
  const int max_iter = cfg.max_iter.value_or(default_max_iter(cfg.family));

  // results[cell][variant][trial]
  std::vector<std::vector<std::vector<RunRecord>>> results(
      cells.size(), std::vector<std::vector<RunRecord>>(
                        cfg.variants.size(), std::vector<RunRecord>(cfg.trials)));

  struct Task {
    std::size_t cell;
    int trial;
  };
  std::vector<Task> tasks;
  tasks.reserve(cells.size() * cfg.trials);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int trial = 0; trial < cfg.trials; ++trial) tasks.push_back({c, trial});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    try {
      for (;;) {
        const std::size_t id = next.fetch_add(1);
        if (id >= tasks.size()) return;
        const Task& task = tasks[id];
        const Cell& cell = cells[task.cell];
        const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(task.trial);

        for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
          const VariantSpec& spec = cfg.variants[v];
          const double k = cfg.k.value_or(default_k(cfg.family, spec.variant.kind));
          RunRecord rec;
          rec.trial = task.trial;
          rec.seed = seed;
          switch (cfg.family) {
            case Family::SparseLs: {
              const SparseLsData data = gen_sparse_ls(cell.m, cell.n, seed, cfg.noise_level);
              rec.metrics = run_one(data.instance, spec.variant, k, tol, max_iter);
              break;
            }
            case Family::Feasibility: {
              const FeasibilityData data = gen_feasibility(cell.m, cell.n, seed);
              rec.metrics = run_one(data.instance, spec.variant, k, tol, max_iter);
              break;
            }
            case Family::Completion: {
              const CompletionInstance inst = gen_completion(cell.n, cell.rank, cell.p, seed);
              rec.metrics = run_one(inst, spec.variant, k, tol, max_iter);
              break;
            }
          }
          results[task.cell][v][task.trial] = std::move(rec);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  const int workers = std::min<int>(cfg.workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  RunTable table;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t v = 0; v < cfg.variants.size(); ++v)
      table.rows.push_back(aggregate(cfg, cells[c], cfg.variants[v], results[c][v]));
  return table;
}

namespace {

std::string fmt_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

std::string opt_float(const std::optional<double>& v) { return v ? fmt_float(*v) : ""; }
std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

json row_to_json(const TableRow& row, bool keep_runs) {
  json j;
  j["family"] = family_tag(row.family);
  if (row.m >= 0) j["m"] = row.m;
  if (row.n >= 0) j["n"] = row.n;
  if (row.rank >= 0) j["rank"] = row.rank;
  if (!std::isnan(row.p)) j["p"] = row.p;
  j["variant"] = row.variant;
  if (!std::isnan(row.alpha)) j["alpha"] = row.alpha;
  j["trials"] = row.trials;
  j["iter"] = row.iter_mean;
  if (row.fval_mean) j["fval"] = *row.fval_mean;
  if (row.fval_max) j["fval_max"] = *row.fval_max;
  if (row.fval_min) j["fval_min"] = *row.fval_min;
  if (row.succ) j["succ"] = *row.succ;
  if (row.fail) j["fail"] = *row.fail;
  j["time_s"] = row.time_mean;
  if (row.iter_succ_mean) j["iter_succ"] = *row.iter_succ_mean;
  if (row.time_succ_mean) j["time_succ"] = *row.time_succ_mean;
  if (row.rel_err_mean) j["rel_err"] = *row.rel_err_mean;
  if (keep_runs && !row.runs.empty()) {
    json runs = json::array();
    for (const RunRecord& rec : row.runs) {
      json r;
      r["trial"] = rec.trial;
      r["seed"] = rec.seed;
      r["iterations"] = rec.metrics.iterations;
      r["time_s"] = rec.metrics.wall_time;
      r["termination"] = to_string(rec.metrics.termination);
      if (rec.metrics.fval) r["fval"] = *rec.metrics.fval;
      if (rec.metrics.success) r["success"] = *rec.metrics.success;
      if (rec.metrics.rel_err) r["rel_err"] = *rec.metrics.rel_err;
      runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
  }
  return j;
}

}  // namespace

void emit_csv(const RunTable& table, std::ostream& os) {
  os << "family,m,n,rank,p,variant,alpha,iter,fval,fval_max,fval_min,succ,fail,"
        "time_s,iter_succ,time_succ,rel_err\n";
  for (const TableRow& row : table.rows) {
    os << family_tag(row.family) << ',';
    os << (row.m >= 0 ? std::to_string(row.m) : "") << ',';
    os << (row.n >= 0 ? std::to_string(row.n) : "") << ',';
    os << (row.rank >= 0 ? std::to_string(row.rank) : "") << ',';
    os << (!std::isnan(row.p) ? fmt_float(row.p) : "") << ',';
    os << row.variant << ',';
    os << (!std::isnan(row.alpha) ? fmt_float(row.alpha) : "") << ',';
    os << fmt_float(row.iter_mean) << ',';
    os << opt_float(row.fval_mean) << ',';
    os << opt_float(row.fval_max) << ',';
    os << opt_float(row.fval_min) << ',';
    os << opt_int(row.succ) << ',';
    os << opt_int(row.fail) << ',';
    os << fmt_float(row.time_mean) << ',';
    os << opt_float(row.iter_succ_mean) << ',';
    os << opt_float(row.time_succ_mean) << ',';
    os << opt_float(row.rel_err_mean) << '\n';
  }
}

void emit_json(const RunTable& table, std::ostream& os) {
  json rows = json::array();
  for (const TableRow& row : table.rows) rows.push_back(row_to_json(row, true));
  os << rows.dump(2) << '\n';
}

void emit_table(const RunTable& table, OutputFormat format, const std::string& path) {
  auto write = [&](std::ostream& os) {
    if (format == OutputFormat::Csv)
      emit_csv(table, os);
    else
      emit_json(table, os);
    if (!os) throw IoError("emit_table: write failed: " + (path.empty() ? "<stdout>" : path));
  };
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("emit_table: cannot open for writing: " + path);
  write(file);
}

}  // namespace pdrs
