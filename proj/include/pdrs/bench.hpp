/* Benchmark harness: configures a sweep over (size grid x variants x trials),
 * runs every cell from the origin with the family's step-size bookkeeping,
 * and aggregates per-run metrics into a table mirroring the experiment
 * reports (iterations, fval extremes, success counts, runtimes, relative
 * error). Trials share the instance across variants: seed = base_seed + trial.
 */
#pragma once

#include "pdrs/datagen.hpp"
#include "pdrs/problems.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pdrs {

enum class Family { SparseLs, Feasibility, Completion };

const char* family_tag(Family f);  // "lsq", "feas", "complete"

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VariantSpec {
  SchemeVariant variant;
  std::string label;  // table key, e.g. "dr", "pdr", "pr", "alt", "svp", "svt"
};

/* Family defaults mirroring the experiment parameterization: the gamma
 * inflation factor k, the stop tolerance and the iteration cap. */
double default_k(Family family, SchemeVariant::Kind kind);
double default_tol(Family family);
int default_max_iter(Family family);
std::vector<VariantSpec> default_variants(Family family, const std::vector<double>& alphas,
                                          double beta);

struct ExperimentConfig {
  Family family = Family::Feasibility;
  std::vector<int> m_values;     // lsq/feas row counts
  std::vector<int> n_values;     // column counts, or the matrix side for completion
  std::vector<int> rank_values;  // completion
  std::vector<double> p_values;  // completion sampling ratios
  std::vector<VariantSpec> variants;
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::optional<double> k;        // overrides default_k when set
  std::optional<double> tol;      // overrides default_tol when set
  std::optional<int> max_iter;    // overrides default_max_iter when set
  double noise_level = 0.01;      // lsq data generation
  int workers = 1;
  bool keep_runs = false;         // retain per-run records (JSON detail mode)

  void validate() const;
};

struct RunRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

struct TableRow {
  Family family = Family::Feasibility;
  int m = -1;     // -1 marks an absent dimension
  int n = -1;
  int rank = -1;
  double p = kNaN;
  std::string variant;
  double alpha = kNaN;  // absent for non-PDR variants
  int trials = 0;

  double iter_mean = 0.0;
  std::optional<double> fval_mean, fval_max, fval_min;
  std::optional<int> succ, fail;
  double time_mean = 0.0;
  std::optional<double> iter_succ_mean, time_succ_mean, rel_err_mean;

  std::vector<RunRecord> runs;  // populated in detail mode
};

struct RunTable {
  std::vector<TableRow> rows;
};

/* Gamma bookkeeping for one scheme run: the safeguard floor and the starting
 * value (k * gamma0 for PDR/DR, 0.93/(beta L) for PR, none for the
 * projection-style baselines). */
struct GammaPlan {
  double floor = 0.0;
  double start = 0.0;
};

GammaPlan gamma_plan(const SchemeVariant& variant, double lipschitz, double k);

/* Runs one (instance, variant) cell from the origin and evaluates it. */
RunMetrics run_one(const SparseLsInstance& inst, const SchemeVariant& variant, double k,
                   double tol, int max_iter, SolveTrace* trace_out = nullptr);
RunMetrics run_one(const FeasibilityInstance& inst, const SchemeVariant& variant, double k,
                   double tol, int max_iter, SolveTrace* trace_out = nullptr);
RunMetrics run_one(const CompletionInstance& inst, const SchemeVariant& variant, double k,
                   double tol, int max_iter, SolveTrace* trace_out = nullptr);

RunTable run_experiment(const ExperimentConfig& cfg);

enum class OutputFormat { Csv, Json };

/* CSV: fixed header
 * family,m,n,rank,p,variant,alpha,iter,fval,fval_max,fval_min,succ,fail,time_s,iter_succ,time_succ,rel_err
 * with floats in 6-significant-digit scientific notation and absent values
 * left empty. JSON: an array of row objects, absent fields omitted, per-run
 * records included in detail mode. */
void emit_csv(const RunTable& table, std::ostream& os);
void emit_json(const RunTable& table, std::ostream& os);

/* Writes to the path (stdout when empty); throws IoError with the path in
 * the message when the sink cannot be written. */
void emit_table(const RunTable& table, OutputFormat format, const std::string& path);

}  // namespace pdrs
