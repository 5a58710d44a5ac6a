#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cmath>

#include "gcl/csbm.hpp"
#include "gcl/io.hpp"
#include "gcl/experiments.hpp"
#include "gcl/gnn.hpp"
#include "gcl/ot.hpp"
#include "gcl/theory.hpp"
#include "gcl/trainer.hpp"

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::string tok;
  std::istringstream iss(csv);
  while (std::getline(iss, tok, ',')) {
    if (!tok.empty()) out.push_back(gcl::parse_double(tok));
  }
  if (out.empty()) throw CLI::ValidationError("empty numeric list: '" + csv + "'");
  return out;
}

std::vector<gcl::Method> parse_methods(const std::string& csv) {
  std::vector<gcl::Method> out;
  std::string tok;
  std::istringstream iss(csv);
  while (std::getline(iss, tok, ',')) {
    if (!tok.empty()) out.push_back(gcl::method_from_name(tok));
  }
  if (out.empty()) throw CLI::ValidationError("empty method list");
  return out;
}

// Flags shared by every suite; writes into an ExperimentOptions after parse.
struct CommonFlags {
  std::string outdir = "out";
  std::uint64_t seed = 20240817;
  int workers = 0;
  int n = 128, d = 128;
  double degree = 10.0, ratio = 5.0, signal = 1.0, sigma = 1.0;
  int epochs = 200;
  double lr = 0.01;
  double val_fraction = 0.2;
  std::string methods = "erm,cmd,gconda";
  int trials = 30;
  double lambda = -1.0, alpha = -1.0, beta = -1.0;
  int k_moments = -1;

  void attach(CLI::App* cmd, bool training) {
    cmd->add_option("--out-dir", outdir, "output directory");
    cmd->add_option("--seed", seed, "base seed");
    cmd->add_option("--workers", workers, "worker threads (0 = auto)");
    cmd->add_option("--n", n, "nodes per graph");
    cmd->add_option("--d", d, "feature dimension");
    cmd->add_option("--degree", degree, "average degree");
    cmd->add_option("--ratio", ratio, "source intra/inter edge ratio");
    cmd->add_option("--signal", signal, "||mu||/sigma");
    cmd->add_option("--sigma", sigma, "feature noise std");
    if (training) {
      cmd->add_option("--epochs", epochs, "training epochs");
      cmd->add_option("--lr", lr, "learning rate");
      cmd->add_option("--val-fraction", val_fraction, "source validation fraction");
      cmd->add_option("--methods", methods, "comma list: erm,cmd,gconda,gconda_pp,gconda_dirl");
      cmd->add_option("--trials", trials, "trials per grid point");
      cmd->add_option("--lambda", lambda, "regularizer weight override");
      cmd->add_option("--alpha", alpha, "embedding-cost weight override");
      cmd->add_option("--beta", beta, "label-cost weight override");
      cmd->add_option("--k-moments", k_moments, "CMD moment order override");
    }
  }

  gcl::ExperimentOptions to_options() const {
    gcl::ExperimentOptions opts;
    opts.outdir = outdir;
    opts.base_seed = seed;
    opts.workers = workers;
    opts.source.n = n;
    opts.source.d = d;
    opts.source.avg_degree = degree;
    opts.source.ratio = ratio;
    opts.source.signal = signal;
    opts.source.sigma = sigma;
    opts.trials = trials;
    opts.methods = parse_methods(methods);
    opts.base.epochs = epochs;
    opts.base.lr = lr;
    opts.base.val_fraction = val_fraction;
    if (lambda >= 0.0) opts.lambda_override = lambda;
    if (alpha >= 0.0) opts.alpha_override = alpha;
    if (beta >= 0.0) opts.beta_override = beta;
    if (k_moments >= 1) opts.k_moments_override = k_moments;
    return opts;
  }
};

int run_selftest() {
  int failures = 0;
  int checks = 0;

  // Exact-solver agreement with the exhaustive oracle.
  {
    gcl::RngState rng(777);
    int bad = 0;
    for (int it = 0; it < 200; ++it) {
      int n = 2 + static_cast<int>(rng.below(6));  // 2..7
      gcl::Matrix cost(n, n);
      for (double& v : cost.data) v = rng.uniform01() * 10.0;
      auto fast = gcl::solve_emd(cost);
      auto slow = gcl::brute_force_emd(cost);
      ++checks;
      if (std::fabs(fast.total_cost - slow.total_cost) > 1e-9) ++bad;
      // Marginal feasibility.
      for (int i = 0; i < n; ++i) {
        double rs = 0.0, cs = 0.0;
        for (int j = 0; j < n; ++j) {
          rs += fast.gamma(i, j);
          cs += fast.gamma(j, i);
        }
        if (std::fabs(rs - 1.0 / n) > 1e-9 || std::fabs(cs - 1.0 / n) > 1e-9) ++bad;
      }
    }
    failures += bad;
    std::printf("ot-exactness: %s (200 instances)\n", bad == 0 ? "pass" : "FAIL");
  }

  // Finite-difference gradient agreement for every loss family.
  {
    gcl::RngState rng(4242);
    struct Cfg {
      gcl::Method method;
      double lambda, alpha, beta;
    };
    const Cfg cfgs[] = {
        {gcl::Method::erm, 0.0, 0.0, 0.0},
        {gcl::Method::gconda, 1.0, 0.0, 1.0},
        {gcl::Method::gconda_pp, 1.0, 0.5, 1.0},
        {gcl::Method::cmd, 1.0, 0.0, 0.0},
    };
    int bad = 0;
    for (const Cfg& c : cfgs) {
      for (int inst = 0; inst < 12; ++inst) {
        gcl::CsbmParams params;
        params.n = 8;
        params.d = 5;
        params.avg_degree = 3;
        params.ratio = 3.0;
        gcl::RngState gr = rng.split();
        gcl::Graph gs = gcl::generate_csbm(params, gr);
        gcl::Graph gt = gcl::generate_csbm(params, gr);
        gcl::TrainConfig cfg;
        cfg.method = c.method;
        cfg.lambda = c.lambda;
        cfg.alpha = c.alpha;
        cfg.beta = c.beta;
        cfg.k_moments = 3;
        cfg.hidden = {4};
        gcl::RngState ir = rng.split();
        gcl::GcnModel model = gcl::make_model(params.d, cfg.hidden, 2, gcl::Activation::silu, ir);
        gcl::AdjacencyOp adj_s = gcl::normalize_adjacency(gs, cfg.adjacency);
        gcl::AdjacencyOp adj_t = gcl::normalize_adjacency(gt, cfg.adjacency);
        std::vector<int> train_idx{0, 1, 2, 3, 4, 5};
        std::vector<int> tgt_idx{1, 2, 3, 4, 6, 7};
        gcl::TransportPlan plan;
        bool ot = c.method != gcl::Method::erm && c.method != gcl::Method::cmd;
        if (ot) {
          gcl::Matrix cost(6, 6);
          for (double& v : cost.data) v = rng.uniform01();
          plan = gcl::solve_emd(cost);
        }
        auto loss_of = [&](const gcl::GcnModel& m) {
          gcl::Gradients g = gcl::Gradients::zeros_like(m);
          return gcl::compute_loss_and_grads(m, cfg, adj_s, gs.features, gs.labels, train_idx,
                                             &adj_t, &gt.features, ot ? &plan : nullptr,
                                             ot ? &tgt_idx : nullptr, g)
              .total;
        };
        gcl::Gradients grads = gcl::Gradients::zeros_like(model);
        gcl::compute_loss_and_grads(model, cfg, adj_s, gs.features, gs.labels, train_idx, &adj_t,
                                    &gt.features, ot ? &plan : nullptr, ot ? &tgt_idx : nullptr,
                                    grads);
        // Probe a handful of coordinates per tensor.
        auto probe = [&](double* w, double analytic) {
          const double h = 1e-4;
          double keep = *w;
          *w = keep + h;
          double up = loss_of(model);
          *w = keep - h;
          double dn = loss_of(model);
          *w = keep;
          double fd = (up - dn) / (2.0 * h);
          double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
          ++checks;
          if (std::fabs(fd - analytic) / denom > 1e-4) ++bad;
        };
        for (std::size_t k = 0; k < model.layers.size(); ++k)
          for (std::size_t t = 0; t < model.layers[k].data.size(); t += 7)
            probe(&model.layers[k].data[t], grads.layers[k].data[t]);
        for (std::size_t t = 0; t < model.head_w.data.size(); t += 3)
          probe(&model.head_w.data[t], grads.head_w.data[t]);
        probe(&model.head_b[0], grads.head_b[0]);
      }
    }
    failures += bad;
    std::printf("gradient-check: %s (4 loss families)\n", bad == 0 ? "pass" : "FAIL");
  }

  std::printf("selftest: %d checks, %d failures\n", checks, failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSBM shift laboratory: closed-form shift verification and "
               "transport-coupled domain-adaptive training"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // gen -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate one CSBM graph file");
  struct {
    int n = 128, d = 128;
    double degree = 10.0, ratio = 5.0, signal = 1.0, sigma = 1.0;
    std::uint64_t seed = 1;
    std::string out = "graph.txt";
  } g;
  gen->add_option("--n", g.n);
  gen->add_option("--d", g.d);
  gen->add_option("--degree", g.degree);
  gen->add_option("--ratio", g.ratio);
  gen->add_option("--signal", g.signal);
  gen->add_option("--sigma", g.sigma);
  gen->add_option("--seed", g.seed);
  gen->add_option("--out", g.out);

  // theory ----------------------------------------------------------------
  auto* theory = app.add_subcommand("theory", "closed forms vs sampling oracles over a grid");
  CommonFlags tf;
  tf.attach(theory, false);
  struct {
    std::string m_grid = "0.5,1,2";
    std::string delta_grid = "0,0.25,0.5,1";
    std::string rtgt_grid = "0.5,1,3,5";
    double d_tgt = 10.0;
    long long feature_samples = 100000;
    int graphs = 50;
    int graph_nodes = 2000;
  } tg;
  theory->add_option("--m-grid", tg.m_grid, "signal grid, comma list");
  theory->add_option("--delta-grid", tg.delta_grid, "translation grid");
  theory->add_option("--rtgt-grid", tg.rtgt_grid, "target ratio grid");
  theory->add_option("--dtgt", tg.d_tgt, "target average degree");
  theory->add_option("--feature-samples", tg.feature_samples, "samples per feature-level point");
  theory->add_option("--graphs", tg.graphs, "graphs per latent-level point");
  theory->add_option("--graph-nodes", tg.graph_nodes, "nodes per oracle graph");

  // sweeps ------------------------------------------------------------------
  auto* sweep_pq = app.add_subcommand("sweep-pq", "train across target structure ratios");
  CommonFlags pf;
  pf.attach(sweep_pq, true);
  std::string pq_points = "1,2,3,4,5,6,7,8,9,10";
  sweep_pq->add_option("--points", pq_points, "target p/q grid");

  auto* sweep_delta = app.add_subcommand("sweep-delta", "train across feature-shift strengths");
  CommonFlags df;
  df.attach(sweep_delta, true);
  std::string delta_points = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  double theta_per_delta = 60.0;
  sweep_delta->add_option("--deltas", delta_points, "translation grid");
  sweep_delta->add_option("--theta-per-delta", theta_per_delta, "rotation degrees per unit delta");

  // correlate ---------------------------------------------------------------
  auto* correlate = app.add_subcommand("correlate", "shift measures vs target performance");
  CommonFlags cf;
  cf.attach(correlate, true);
  int pairs = 48;
  correlate->add_option("--pairs", pairs, "number of source/target pairs");

  // fig1 ----------------------------------------------------------------------
  auto* fig1 = app.add_subcommand("fig1", "MLP vs GCN generalization gap along both shift axes");
  CommonFlags ff;
  ff.signal = 0.85;
  ff.attach(fig1, true);
  int fig1_seeds = 20;
  fig1->add_option("--seeds", fig1_seeds, "independent trainings per model");

  // selftest ------------------------------------------------------------------
  app.add_subcommand("selftest", "run the solver-oracle and gradient suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      gcl::CsbmParams params;
      params.n = g.n;
      params.d = g.d;
      params.avg_degree = g.degree;
      params.ratio = g.ratio;
      params.signal = g.signal;
      params.sigma = g.sigma;
      gcl::RngState rng(g.seed);
      gcl::Graph graph = gcl::generate_csbm(params, rng);
      gcl::write_graph(graph, g.out);
      std::cerr << "wrote " << g.out << " (" << graph.n << " nodes, " << graph.edges.size()
                << " edges)\n";
      return 0;
    }
    if (theory->parsed()) {
      gcl::ExperimentOptions opts = tf.to_options();
      opts.m_grid = parse_list(tg.m_grid);
      opts.delta_grid = parse_list(tg.delta_grid);
      opts.r_tgt_grid = parse_list(tg.rtgt_grid);
      opts.d_tgt = tg.d_tgt;
      opts.feature_samples = tg.feature_samples;
      opts.mc_graphs = tg.graphs;
      opts.mc_nodes = tg.graph_nodes;
      return gcl::run_theory(opts).failed == 0 ? 0 : 1;
    }
    if (sweep_pq->parsed()) {
      gcl::ExperimentOptions opts = pf.to_options();
      opts.pq_points = parse_list(pq_points);
      return gcl::run_sweep_pq(opts).failed == 0 ? 0 : 1;
    }
    if (sweep_delta->parsed()) {
      gcl::ExperimentOptions opts = df.to_options();
      opts.delta_points = parse_list(delta_points);
      opts.theta_per_delta = theta_per_delta;
      return gcl::run_sweep_delta(opts).failed == 0 ? 0 : 1;
    }
    if (correlate->parsed()) {
      gcl::ExperimentOptions opts = cf.to_options();
      opts.correlate_pairs = pairs;
      return gcl::run_correlate(opts).failed == 0 ? 0 : 1;
    }
    if (fig1->parsed()) {
      gcl::ExperimentOptions opts = ff.to_options();
      opts.fig1_seeds = fig1_seeds;
      opts.fig1_m = ff.signal;
      return gcl::run_fig1(opts).failed == 0 ? 0 : 1;
    }
    return run_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
