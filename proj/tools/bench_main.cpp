/* Command-line harness: configures and runs the three experiment families
 * (sparse least squares, sparse feasibility, low-rank completion) over a size
 * grid, variants and seeded trials, and emits the aggregated table as CSV or
 * JSON. Exit codes: 0 ok, 1 invalid configuration, 2 I/O failure, 3 selftest
 * failure.
 */
#include "pdrs/bench.hpp"
#include "selftest.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace pdrs;

struct CliOptions {
  std::vector<int> m, n, rank;
  std::vector<double> p, alphas;
  std::vector<std::string> variants;
  int trials = 5;
  std::uint64_t seed = 0;
  double k = 0.0;
  double tol = 0.0;
  int max_iter = 0;
  double beta = 2.2;
  double noise_level = 0.01;
  std::string out;
  std::string format = "csv";
  bool paper_defaults = false;
  bool detail = false;
  std::string dump_dir;
};

void add_common_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--m", o.m, "row counts (repeatable)")->delimiter(',');
  cmd->add_option("--n", o.n, "column counts / matrix side (repeatable)")->delimiter(',');
  cmd->add_option("--alpha", o.alphas, "PDR reflection coefficients in (1.5, 2]")->delimiter(',');
  cmd->add_option("--variants", o.variants,
                  "variant labels: dr, pdr, pr, alt, svp, svt, pdr-plain")
      ->delimiter(',');
  cmd->add_option("--trials", o.trials, "seeded trials per grid cell")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "base seed; trial i uses seed+i");
  cmd->add_option("--k", o.k, "gamma inflation factor (default: family value)");
  cmd->add_option("--tol", o.tol, "stop tolerance (default: family value)");
  cmd->add_option("--max-iter", o.max_iter, "iteration cap (default: family value)");
  cmd->add_option("--beta", o.beta, "PR strong-convexity shift (> 2)");
  cmd->add_option("--out", o.out, "output path (default: stdout)");
  cmd->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--paper-defaults", o.paper_defaults,
                "use the published parameterization (k, tolerances, stop rules)");
  cmd->add_flag("--detail", o.detail, "keep per-run records in JSON output");
  cmd->add_option("--dump-instances", o.dump_dir, "write generated instances as JSON files");
}

std::vector<double> default_alphas(Family family) {
  switch (family) {
    case Family::SparseLs: return {1.9, 1.8, 1.7};
    case Family::Feasibility: return {1.7};
    case Family::Completion: return {1.9, 1.8, 1.7, 1.6};
  }
  return {};
}

std::vector<VariantSpec> parse_variants(Family family, const std::vector<std::string>& names,
                                        const std::vector<double>& alphas, double beta) {
  std::vector<VariantSpec> out;
  for (const std::string& name : names) {
    if (name == "dr") {
      out.push_back({SchemeVariant::pdr(2.0), "dr"});
    } else if (name == "pdr") {
      for (double a : alphas) out.push_back({SchemeVariant::pdr(a), "pdr"});
    } else if (name == "pdr-plain") {
      for (double a : alphas) out.push_back({SchemeVariant::pdr_plain(a), "pdr-plain"});
    } else if (name == "pr") {
      out.push_back({SchemeVariant::pr(beta), "pr"});
    } else if (name == "alt") {
      out.push_back({SchemeVariant::alternating(), "alt"});
    } else if (name == "svp") {
      out.push_back({SchemeVariant::svp(), "svp"});
    } else if (name == "svt") {
      out.push_back({SchemeVariant::svt(), "svt"});
    } else {
      throw std::invalid_argument("unknown variant: " + name);
    }
  }
  (void)family;
  return out;
}

int env_workers() {
  const char* raw = std::getenv("PDRS_WORKERS");
  if (!raw) return 1;
  const int parsed = std::atoi(raw);
  return parsed >= 1 ? parsed : 1;
}

ExperimentConfig make_config(Family family, const CliOptions& o, const CLI::App* cmd) {
  ExperimentConfig cfg;
  cfg.family = family;
  cfg.trials = o.trials;
  cfg.base_seed = o.seed;
  cfg.noise_level = o.noise_level;
  cfg.workers = env_workers();
  cfg.keep_runs = o.detail;

  // --paper-defaults pins k/tol/max-iter to the published per-family values,
  // overriding any explicit flags.
  if (!o.paper_defaults) {
    if (cmd->count("--k") > 0) cfg.k = o.k;
    if (cmd->count("--tol") > 0) cfg.tol = o.tol;
    if (cmd->count("--max-iter") > 0) cfg.max_iter = o.max_iter;
  }

  switch (family) {
    case Family::SparseLs:
      cfg.m_values = o.m.empty() ? std::vector<int>{40} : o.m;
      cfg.n_values = o.n.empty() ? std::vector<int>{200} : o.n;
      break;
    case Family::Feasibility:
      cfg.m_values = o.m.empty() ? std::vector<int>{40} : o.m;
      cfg.n_values = o.n.empty() ? std::vector<int>{240} : o.n;
      break;
    case Family::Completion:
      cfg.n_values = o.n.empty() ? std::vector<int>{80} : o.n;
      cfg.rank_values = o.rank.empty() ? std::vector<int>{5} : o.rank;
      cfg.p_values = o.p.empty() ? std::vector<double>{0.3} : o.p;
      break;
  }

  const std::vector<double> alphas = o.alphas.empty() ? default_alphas(family) : o.alphas;
  cfg.variants = o.variants.empty() ? default_variants(family, alphas, o.beta)
                                    : parse_variants(family, o.variants, alphas, o.beta);
  return cfg;
}

void dump_instances(const ExperimentConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    const std::filesystem::path path = std::filesystem::path(dir) / name;
    std::ofstream file(path);
    if (!file) throw IoError("cannot write instance file: " + path.string());
    file << text << '\n';
    if (!file) throw IoError("write failed: " + path.string());
  };

  for (int trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
    if (cfg.family == Family::Completion) {
      for (int n : cfg.n_values)
        for (int r : cfg.rank_values)
          for (double p : cfg.p_values) {
            const auto inst = gen_completion(n, r, p, seed);
            write("complete_n" + std::to_string(n) + "_r" + std::to_string(r) + "_t" +
                      std::to_string(trial) + ".json",
                  save_instance_json(inst));
          }
    } else {
      for (int m : cfg.m_values)
        for (int n : cfg.n_values) {
          const std::string stem =
              "_m" + std::to_string(m) + "_n" + std::to_string(n) + "_t" + std::to_string(trial);
          if (cfg.family == Family::SparseLs)
            write("lsq" + stem + ".json",
                  save_instance_json(gen_sparse_ls(m, n, seed, cfg.noise_level).instance));
          else
            write("feas" + stem + ".json", save_instance_json(gen_feasibility(m, n, seed).instance));
        }
    }
  }
}

int run_family(Family family, const CliOptions& o, const CLI::App* cmd) {
  ExperimentConfig cfg = make_config(family, o, cmd);
  if (!o.dump_dir.empty()) dump_instances(cfg, o.dump_dir);
  const RunTable table = run_experiment(cfg);
  emit_table(table, o.format == "json" ? OutputFormat::Json : OutputFormat::Csv, o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for parameterized Douglas-Rachford splitting"};
  app.require_subcommand(1);

  CliOptions lsq_opts, feas_opts, complete_opts;

  CLI::App* lsq = app.add_subcommand("lsq", "sparsity-constrained least squares");
  add_common_flags(lsq, lsq_opts);
  lsq->add_option("--noise-level", lsq_opts.noise_level, "noise scale in b = A x + noise*eps");

  CLI::App* feas = app.add_subcommand("feas", "sparse affine feasibility");
  add_common_flags(feas, feas_opts);

  CLI::App* complete = app.add_subcommand("complete", "low-rank matrix completion");
  add_common_flags(complete, complete_opts);
  complete->add_option("--rank", complete_opts.rank, "target ranks (repeatable)")->delimiter(',');
  complete->add_option("--p", complete_opts.p, "sampling ratios in (0, 1]")->delimiter(',');

  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (selftest->parsed()) {
      return run_selftest(std::cout) == 0 ? 0 : 3;
    }
    if (lsq->parsed()) return run_family(Family::SparseLs, lsq_opts, lsq);
    if (feas->parsed()) return run_family(Family::Feasibility, feas_opts, feas);
    if (complete->parsed()) return run_family(Family::Completion, complete_opts, complete);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
