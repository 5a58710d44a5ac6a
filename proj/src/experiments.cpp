#include "gcl/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "gcl/io.hpp"
#include "gcl/stats.hpp"
#include "gcl/theory.hpp"

namespace gcl {

namespace {

// Stable sub-stream tags for the suites.
enum SuiteTag : std::uint64_t {
  kTheory = 1,
  kSweepPq = 2,
  kSweepDelta = 3,
  kCorrelate = 4,
  kFig1 = 5,
};

std::string csv_num(double v) { return format_double(v); }

void write_file(const std::string& dir, const std::string& name, const std::string& body) {
  std::filesystem::create_directories(dir);
  std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path);
}

double wall_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GCLAB_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 4u : hw, 8u));
}

void parallel_for(int n_tasks, int workers, const std::function<void(int)>& fn) {
  workers = std::min(std::max(workers, 1), n_tasks);
  if (workers <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n_tasks) return;
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

MethodHypers default_hypers(Method m) {
  MethodHypers h;
  switch (m) {
    case Method::erm: break;
    case Method::cmd:
      h.lambda = 1.0;
      h.k_moments = 5;
      break;
    case Method::gconda:
      h.lambda = 1.0;
      h.beta = 1.0;
      break;
    case Method::gconda_pp:
      h.lambda = 1.0;
      h.alpha = 0.1;
      h.beta = 1.0;
      break;
    case Method::gconda_dirl:
      h.lambda = 1.0;
      h.alpha = 0.1;
      break;
  }
  return h;
}

TrainConfig resolved_config(const ExperimentOptions& opts, Method m, std::uint64_t seed) {
  TrainConfig cfg = opts.base;
  cfg.method = m;
  MethodHypers h = default_hypers(m);
  cfg.lambda = opts.lambda_override.value_or(h.lambda);
  cfg.alpha = opts.alpha_override.value_or(h.alpha);
  cfg.beta = opts.beta_override.value_or(h.beta);
  cfg.k_moments = opts.k_moments_override.value_or(h.k_moments);
  if (m == Method::erm) {  // weights are meaningless for plain ERM
    cfg.lambda = 0.0;
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
  }
  if (m == Method::gconda) cfg.alpha = 0.0;
  if (m == Method::gconda_dirl) cfg.beta = 0.0;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// theory suite

SuiteResult run_theory(const ExperimentOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  struct Row {
    ShiftInputs inp;
    ClosedFormReport cf;
    McEstimate yx, eps_t_f_mc, eps_s_f_mc;
    GraphMcReport gr;
  };
  std::vector<ShiftInputs> points;
  for (double m : opts.m_grid)
    for (double delta : opts.delta_grid)
      for (double r : opts.r_tgt_grid) {
        ShiftInputs inp;
        inp.m = m;
        inp.delta = delta;
        inp.r_src = opts.source.ratio;
        inp.r_tgt = r;
        inp.D_src = opts.source.avg_degree;
        inp.D_tgt = opts.d_tgt;
        points.push_back(inp);
      }

  std::vector<Row> rows(points.size());
  RngState base(opts.base_seed);
  parallel_for(static_cast<int>(points.size()), resolve_workers(opts.workers), [&](int i) {
    RngState point_rng = base.derive(kTheory).derive(static_cast<std::uint64_t>(i));
    Row& r = rows[i];
    r.inp = points[i];
    r.cf = closed_form_report(r.inp);
    RngState rng_yx = point_rng.derive(0);
    RngState rng_ef = point_rng.derive(1);
    RngState rng_es = point_rng.derive(2);
    RngState rng_g = point_rng.derive(3);
    r.yx = mc_conditional_shift_feature(r.inp.m, r.inp.delta, opts.feature_samples, rng_yx);
    r.eps_t_f_mc = mc_expected_error_feature(r.inp.m, r.inp.delta, opts.feature_samples, rng_ef);
    r.eps_s_f_mc = mc_expected_error_feature(r.inp.m, 0.0, opts.feature_samples, rng_es);
    r.gr = mc_graph_report(r.inp, opts.mc_graphs, opts.mc_nodes, rng_g);
  });

  std::ostringstream csv;
  csv << "m,delta,r_src,r_tgt,d_tgt"
      << ",delta_yx_cf,delta_yx_mc,se_delta_yx"
      << ",delta_yh_cf,delta_yh_mc,se_delta_yh"
      << ",eps_t_f_cf,eps_t_f_mc,se_eps_t_f"
      << ",eps_t_fg_cf,eps_t_fg_mc,se_eps_t_fg"
      << ",eps_s_f_cf,eps_s_f_mc,se_eps_s_f"
      << ",eps_s_fg_cf,eps_s_fg_mc,se_eps_s_fg\n";
  for (const Row& r : rows) {
    csv << csv_num(r.inp.m) << ',' << csv_num(r.inp.delta) << ',' << csv_num(r.inp.r_src) << ','
        << csv_num(r.inp.r_tgt) << ',' << csv_num(r.inp.D_tgt) << ',' << csv_num(r.cf.delta_yx)
        << ',' << csv_num(r.yx.estimate) << ',' << csv_num(r.yx.std_error) << ','
        << csv_num(r.cf.delta_yh) << ',' << csv_num(r.gr.delta_yh.estimate) << ','
        << csv_num(r.gr.delta_yh.std_error) << ',' << csv_num(r.cf.eps_t_f) << ','
        << csv_num(r.eps_t_f_mc.estimate) << ',' << csv_num(r.eps_t_f_mc.std_error) << ','
        << csv_num(r.cf.eps_t_fg) << ',' << csv_num(r.gr.eps_t_fg.estimate) << ','
        << csv_num(r.gr.eps_t_fg.std_error) << ',' << csv_num(r.cf.eps_s_f) << ','
        << csv_num(r.eps_s_f_mc.estimate) << ',' << csv_num(r.eps_s_f_mc.std_error) << ','
        << csv_num(r.cf.eps_s_fg) << ',' << csv_num(r.gr.eps_s_fg.estimate) << ','
        << csv_num(r.gr.eps_s_fg.std_error) << '\n';
  }
  write_file(opts.outdir, "theory.csv", csv.str());
  std::cerr << "theory: " << rows.size() << " grid points in " << wall_seconds(t0) << " s\n";
  SuiteResult res;
  res.tasks = static_cast<int>(rows.size());
  return res;
}

// ---------------------------------------------------------------------------
// training sweeps

namespace {

struct SweepPoint {
  double r_tgt = 5.0;
  double delta = 0.0;
  double theta = 0.0;
};

struct TrialRow {
  SweepPoint point;
  int trial = 0;
  Method method = Method::erm;
  std::uint64_t seed = 0;
  std::uint64_t cfg_hash = 0;
  bool ok = false;
  std::string note;
  double auc = 0.0, logloss = 0.0, accuracy = 0.0, w1 = 0.0, cmd = 0.0;
};

ShiftSpec spec_of(const ExperimentOptions& opts, const SweepPoint& pt) {
  ShiftSpec spec;
  spec.delta = pt.delta;
  spec.theta_deg = pt.theta;
  spec.ratio_target = pt.r_tgt;
  spec.degree_target = opts.source.avg_degree;
  return spec;
}

void run_one_trial(const ExperimentOptions& opts, std::uint64_t suite_tag,
                   const SweepPoint& pt, int point_idx, int trial, Method method,
                   TrialRow& row) {
  row.point = pt;
  row.trial = trial;
  row.method = method;
  RngState trial_rng = RngState(opts.base_seed)
                           .derive(suite_tag)
                           .derive(static_cast<std::uint64_t>(point_idx))
                           .derive(static_cast<std::uint64_t>(trial));
  row.seed = trial_rng.derive(1).seed();
  TrainConfig cfg = resolved_config(opts, method, row.seed);
  row.cfg_hash = cfg.config_hash();
  try {
    RngState pair_rng = trial_rng.derive(0);
    auto [g_src, g_tgt] = generate_shifted_pair(opts.source, spec_of(opts, pt), pair_rng);
    TrainReport rep = train(cfg, g_src, g_tgt);
    if (!rep.ok) {
      row.ok = false;
      row.note = rep.note;
      return;
    }
    EvalMetrics ev = evaluate(rep.model, g_tgt, cfg.adjacency);
    if (!ev.auc.has_value()) {
      row.ok = false;
      row.note = "target AUC undefined";
      return;
    }
    PairMetrics pm = pair_metrics(rep.model, g_src, g_tgt, cfg);
    row.ok = true;
    row.auc = *ev.auc;
    row.logloss = ev.logloss;
    row.accuracy = ev.accuracy;
    row.w1 = pm.w1_hat;
    row.cmd = pm.cmd_value;
  } catch (const std::exception& e) {
    row.ok = false;
    row.note = e.what();
  }
}

std::string sanitize_note(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back((c == ',' || c == '\n' || c == '\r') ? ';' : c);
  return out;
}

SuiteResult run_training_sweep(const ExperimentOptions& opts, std::uint64_t suite_tag,
                               const std::string& suite_name,
                               const std::vector<SweepPoint>& points) {
  auto t0 = std::chrono::steady_clock::now();
  const int n_methods = static_cast<int>(opts.methods.size());
  const int n_tasks = static_cast<int>(points.size()) * opts.trials * n_methods;
  std::vector<TrialRow> rows(n_tasks);

  parallel_for(n_tasks, resolve_workers(opts.workers), [&](int task) {
    int mi = task % n_methods;
    int rest = task / n_methods;
    int trial = rest % opts.trials;
    int pi = rest / opts.trials;
    run_one_trial(opts, suite_tag, points[pi], pi, trial, opts.methods[mi], rows[task]);
  });

  std::ostringstream csv;
  csv << "suite,method,m,delta,theta_deg,r_src,r_tgt,degree,n,trial,seed,auc,logloss,"
         "accuracy,w1_hat,cmd_value,status,note,config_hash\n";
  for (const TrialRow& r : rows) {
    csv << suite_name << ',' << method_name(r.method) << ',' << csv_num(opts.source.signal)
        << ',' << csv_num(r.point.delta) << ',' << csv_num(r.point.theta) << ','
        << csv_num(opts.source.ratio) << ',' << csv_num(r.point.r_tgt) << ','
        << csv_num(opts.source.avg_degree) << ',' << opts.source.n << ',' << r.trial << ','
        << r.seed << ',';
    if (r.ok) {
      csv << csv_num(r.auc) << ',' << csv_num(r.logloss) << ',' << csv_num(r.accuracy) << ','
          << csv_num(r.w1) << ',' << csv_num(r.cmd) << ",ok,,";
    } else {
      csv << ",,,,,failed," << sanitize_note(r.note) << ',';
    }
    csv << hex64(r.cfg_hash) << '\n';
  }
  write_file(opts.outdir, "results.csv", csv.str());

  // Per (point, method) aggregate over successful trials.
  std::ostringstream sm;
  sm << "suite,method,delta,theta_deg,r_tgt,auc_mean,auc_std,logloss_mean,accuracy_mean,"
        "w1_mean,cmd_mean,n_ok,n_failed,config_hash\n";
  int failed_total = 0;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    for (int mi = 0; mi < n_methods; ++mi) {
      std::vector<double> aucs, loglosses, accs, w1s, cmds;
      int n_failed = 0;
      std::uint64_t cfg_hash = 0;
      for (int t = 0; t < opts.trials; ++t) {
        const TrialRow& r = rows[(pi * opts.trials + t) * n_methods + mi];
        cfg_hash = r.cfg_hash;
        if (!r.ok) {
          ++n_failed;
          continue;
        }
        aucs.push_back(r.auc);
        loglosses.push_back(r.logloss);
        accs.push_back(r.accuracy);
        w1s.push_back(r.w1);
        cmds.push_back(r.cmd);
      }
      failed_total += n_failed;
      sm << suite_name << ',' << method_name(opts.methods[mi]) << ','
         << csv_num(points[pi].delta) << ',' << csv_num(points[pi].theta) << ','
         << csv_num(points[pi].r_tgt) << ',';
      if (aucs.empty()) {
        sm << ",,,,,,";
      } else {
        sm << csv_num(vec_mean(aucs)) << ','
           << csv_num(aucs.size() > 1 ? vec_std(aucs) : 0.0) << ','
           << csv_num(vec_mean(loglosses)) << ',' << csv_num(vec_mean(accs)) << ','
           << csv_num(vec_mean(w1s)) << ',' << csv_num(vec_mean(cmds)) << ',';
      }
      sm << (opts.trials - n_failed) << ',' << n_failed << ',' << hex64(cfg_hash) << '\n';
    }
  }
  write_file(opts.outdir, "summary.csv", sm.str());
  std::cerr << suite_name << ": " << n_tasks << " trials in " << wall_seconds(t0) << " s, "
            << failed_total << " failed\n";
  SuiteResult res;
  res.tasks = n_tasks;
  res.failed = failed_total;
  return res;
}

}  // namespace

SuiteResult run_sweep_pq(const ExperimentOptions& opts) {
  std::vector<SweepPoint> points;
  for (double r : opts.pq_points) {
    SweepPoint pt;
    pt.r_tgt = r;
    points.push_back(pt);
  }
  return run_training_sweep(opts, kSweepPq, "sweep_pq", points);
}

SuiteResult run_sweep_delta(const ExperimentOptions& opts) {
  std::vector<SweepPoint> points;
  for (double d : opts.delta_points) {
    SweepPoint pt;
    pt.r_tgt = opts.source.ratio;
    pt.delta = d;
    pt.theta = opts.theta_per_delta * d;
    points.push_back(pt);
  }
  return run_training_sweep(opts, kSweepDelta, "sweep_delta", points);
}

// ---------------------------------------------------------------------------
// correlate suite

SuiteResult run_correlate(const ExperimentOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  if (opts.correlate_pairs < 2) throw std::invalid_argument("correlate: need at least 2 pairs");

  struct PairRow {
    double r_tgt = 0.0, delta = 0.0, theta = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t cfg_hash = 0;
    bool ok = false;
    std::string note;
    double auc = 0.0, w1 = 0.0, cmd = 0.0;
  };
  std::vector<PairRow> rows(opts.correlate_pairs);

  parallel_for(opts.correlate_pairs, resolve_workers(opts.workers), [&](int i) {
    PairRow& row = rows[i];
    RngState trial_rng =
        RngState(opts.base_seed).derive(kCorrelate).derive(static_cast<std::uint64_t>(i));
    // Scatter the shifts: structure ratio cycles 1..10, translation cycles
    // a five-step ladder, rotation coupled to translation.
    row.r_tgt = 1.0 + static_cast<double>(i % 10);
    row.delta = 0.25 * static_cast<double>((i / 10) % 5);
    row.theta = opts.theta_per_delta * row.delta;
    row.seed = trial_rng.derive(1).seed();
    TrainConfig cfg = resolved_config(opts, Method::erm, row.seed);
    row.cfg_hash = cfg.config_hash();
    try {
      ShiftSpec spec;
      spec.delta = row.delta;
      spec.theta_deg = row.theta;
      spec.ratio_target = row.r_tgt;
      spec.degree_target = opts.source.avg_degree;
      RngState pair_rng = trial_rng.derive(0);
      auto [g_src, g_tgt] = generate_shifted_pair(opts.source, spec, pair_rng);
      TrainReport rep = train(cfg, g_src, g_tgt);
      if (!rep.ok) {
        row.note = rep.note;
        return;
      }
      EvalMetrics ev = evaluate(rep.model, g_tgt, cfg.adjacency);
      if (!ev.auc.has_value()) {
        row.note = "target AUC undefined";
        return;
      }
      PairMetrics pm = pair_metrics(rep.model, g_src, g_tgt, cfg);
      row.ok = true;
      row.auc = *ev.auc;
      row.w1 = pm.w1_hat;
      row.cmd = pm.cmd_value;
    } catch (const std::exception& e) {
      row.note = e.what();
    }
  });

  std::ostringstream csv;
  csv << "pair,delta,theta_deg,r_src,r_tgt,seed,auc,w1_hat,cmd_value,status,note,config_hash\n";
  std::vector<double> aucs, w1s, cmds;
  int failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PairRow& r = rows[i];
    csv << i << ',' << csv_num(r.delta) << ',' << csv_num(r.theta) << ','
        << csv_num(opts.source.ratio) << ',' << csv_num(r.r_tgt) << ',' << r.seed << ',';
    if (r.ok) {
      csv << csv_num(r.auc) << ',' << csv_num(r.w1) << ',' << csv_num(r.cmd) << ",ok,,";
      aucs.push_back(r.auc);
      w1s.push_back(r.w1);
      cmds.push_back(r.cmd);
    } else {
      csv << ",,,failed," << sanitize_note(r.note) << ',';
      ++failed;
    }
    csv << hex64(r.cfg_hash) << '\n';
  }
  write_file(opts.outdir, "correlate.csv", csv.str());

  std::ostringstream sm;
  sm << "key,value\n";
  sm << "n_pairs," << rows.size() << '\n';
  sm << "n_failed," << failed << '\n';
  if (aucs.size() >= 2) {
    sm << "pearson_w1_auc," << csv_num(pearson_r(w1s, aucs)) << '\n';
    sm << "pearson_cmd_auc," << csv_num(pearson_r(cmds, aucs)) << '\n';
  }
  write_file(opts.outdir, "summary.csv", sm.str());
  std::cerr << "correlate: " << rows.size() << " pairs in " << wall_seconds(t0) << " s, "
            << failed << " failed\n";
  SuiteResult res;
  res.tasks = static_cast<int>(rows.size());
  res.failed = failed;
  return res;
}

// ---------------------------------------------------------------------------
// fig1 suite

SuiteResult run_fig1(const ExperimentOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();

  struct ModelSpec {
    const char* name;
    AdjMode adjacency;
    int layers;
  };
  const ModelSpec model_specs[] = {
      {"mlp", AdjMode::identity, 2},
      {"gcn1", AdjMode::sym_selfloop, 1},
      {"gcn2", AdjMode::sym_selfloop, 2},
  };
  const int n_models = 3;

  struct PointRow {
    std::string sweep;  // "structure" or "feature"
    double axis = 0.0;  // q'/p' or delta
    double eps_s = 0.0, eps_t = 0.0;
  };
  struct TaskOut {
    std::uint64_t seed = 0;
    std::uint64_t cfg_hash = 0;
    bool ok = false;
    std::string note;
    std::vector<PointRow> rows;
  };

  CsbmParams source = opts.source;
  source.signal = opts.fig1_m;
  const int n_tasks = opts.fig1_seeds * n_models;
  std::vector<TaskOut> outs(n_tasks);

  parallel_for(n_tasks, resolve_workers(opts.workers), [&](int task) {
    int mi = task % n_models;
    int si = task / n_models;
    const ModelSpec& ms = model_specs[mi];
    TaskOut& out = outs[task];
    RngState seed_rng =
        RngState(opts.base_seed).derive(kFig1).derive(static_cast<std::uint64_t>(si));
    out.seed = seed_rng.derive(1).seed();
    try {
      RngState gen_rng = seed_rng.derive(0);
      Graph g_src = generate_csbm(source, gen_rng);

      ExperimentOptions local = opts;
      local.base.adjacency = ms.adjacency;
      local.base.hidden.assign(ms.layers, 16);
      TrainConfig cfg = resolved_config(local, Method::erm, out.seed);
      out.cfg_hash = cfg.config_hash();
      TrainReport rep = train(cfg, g_src, g_src);
      if (!rep.ok) {
        out.note = rep.note;
        return;
      }

      // Fresh evaluation graphs share the training graph's mean direction.
      RngState eval_rng = seed_rng.derive(2);
      auto eval_error = [&](const ShiftSpec& spec) {
        auto [mu_pos, mu_neg] = shift_mean(g_src.mu, spec, eval_rng);
        CsbmParams tgt = source;
        tgt.ratio = spec.ratio_target;
        tgt.avg_degree = spec.degree_target;
        Graph g = generate_with_means(source.n, source.d, tgt.p(), tgt.q(), mu_pos, mu_neg,
                                      source.sigma, g_src.mu, false, eval_rng);
        return 1.0 - evaluate(rep.model, g, cfg.adjacency).accuracy;
      };

      double eps_s = eval_error(ShiftSpec::identity(source));
      for (double qp : opts.fig1_qp) {
        ShiftSpec spec = ShiftSpec::identity(source);
        spec.ratio_target = 1.0 / qp;
        PointRow row;
        row.sweep = "structure";
        row.axis = qp;
        row.eps_s = eps_s;
        row.eps_t = eval_error(spec);
        out.rows.push_back(row);
      }
      for (double dlt : opts.fig1_deltas) {
        ShiftSpec spec = ShiftSpec::identity(source);
        spec.delta = dlt;
        PointRow row;
        row.sweep = "feature";
        row.axis = dlt;
        row.eps_s = eps_s;
        row.eps_t = eval_error(spec);
        out.rows.push_back(row);
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.note = e.what();
    }
  });

  std::ostringstream csv;
  csv << "sweep,axis,model,seed_index,seed,eps_s,eps_t,gap,status,note,config_hash\n";
  int failed = 0;
  for (int task = 0; task < n_tasks; ++task) {
    int mi = task % n_models;
    int si = task / n_models;
    const TaskOut& out = outs[task];
    if (!out.ok) {
      ++failed;
      csv << ",," << model_specs[mi].name << ',' << si << ',' << out.seed << ",,,,failed,"
          << sanitize_note(out.note) << ',' << hex64(out.cfg_hash) << '\n';
      continue;
    }
    for (const PointRow& r : out.rows) {
      csv << r.sweep << ',' << csv_num(r.axis) << ',' << model_specs[mi].name << ',' << si
          << ',' << out.seed << ',' << csv_num(r.eps_s) << ',' << csv_num(r.eps_t) << ','
          << csv_num(r.eps_t - r.eps_s) << ",ok,," << hex64(out.cfg_hash) << '\n';
    }
  }
  write_file(opts.outdir, "fig1.csv", csv.str());
  std::cerr << "fig1: " << n_tasks << " trainings in " << wall_seconds(t0) << " s, " << failed
            << " failed\n";
  SuiteResult res;
  res.tasks = n_tasks;
  res.failed = failed;
  return res;
}

}  // namespace gcl
