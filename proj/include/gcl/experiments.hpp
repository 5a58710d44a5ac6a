#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcl/csbm.hpp"
#include "gcl/trainer.hpp"

namespace gcl {

// Everything a suite run needs; the CLI fills this from flags/config files.
struct ExperimentOptions {
  std::string outdir = ".";
  std::uint64_t base_seed = 20240817;
  int workers = 0;  // 0 = GCLAB_WORKERS env or hardware default

  // Closed-form verification grid.
  std::vector<double> m_grid{0.5, 1.0, 2.0};
  std::vector<double> delta_grid{0.0, 0.25, 0.5, 1.0};
  std::vector<double> r_tgt_grid{0.5, 1.0, 3.0, 5.0};
  double d_tgt = 10.0;
  long long feature_samples = 100000;
  int mc_graphs = 50;
  int mc_nodes = 2000;

  // Training suites.
  CsbmParams source;  // shared source-domain parameters
  std::vector<double> pq_points{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> delta_points{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double theta_per_delta = 60.0;  // rotation degrees coupled to delta
  int trials = 30;
  std::vector<Method> methods{Method::erm, Method::cmd, Method::gconda};
  TrainConfig base;  // epochs / lr / hidden / activation / adjacency
  std::optional<double> lambda_override, alpha_override, beta_override;
  std::optional<int> k_moments_override;

  // Generalization-gap comparison (MLP vs GCN).
  int fig1_seeds = 20;
  double fig1_m = 0.85;  // linear source error ~0.2, aggregated ~0
  std::vector<double> fig1_qp{0.2, 0.5, 1.0, 2.0, 5.0};  // target q'/p'
  std::vector<double> fig1_deltas{0.0, 0.25, 0.5, 0.75, 1.0};

  // Shift-measure correlation study.
  int correlate_pairs = 48;
};

// Per-method regularizer weights; user overrides in ExperimentOptions win.
struct MethodHypers {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int k_moments = 5;
};
MethodHypers default_hypers(Method m);
TrainConfig resolved_config(const ExperimentOptions& opts, Method m, std::uint64_t seed);

struct SuiteResult {
  int tasks = 0;
  int failed = 0;
};

// theory.csv: closed forms vs sampling oracles over the grid.
SuiteResult run_theory(const ExperimentOptions& opts);

// results.csv + summary.csv for the structure sweep (target p/q varies)
// and the feature sweep (delta varies, rotation coupled).
SuiteResult run_sweep_pq(const ExperimentOptions& opts);
SuiteResult run_sweep_delta(const ExperimentOptions& opts);

// correlate.csv + summary.csv: transport cost vs CMD as shift measures.
SuiteResult run_correlate(const ExperimentOptions& opts);

// fig1.csv: source/target error of MLP vs 1- and 2-layer aggregation
// stacks along both shift axes.
SuiteResult run_fig1(const ExperimentOptions& opts);

// Fixed-count task pool; each task writes only its own slot, so results are
// independent of scheduling and worker count.
void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn);

int resolve_workers(int requested);

}  // namespace gcl
