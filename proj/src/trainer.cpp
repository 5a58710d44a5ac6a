#include "gcl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gcl/io.hpp"
#include "gcl/stats.hpp"

namespace gcl {

namespace {
constexpr double kProbClamp = 1e-7;   // label-cost log clamp
constexpr double kNormGuard = 1e-12;  // CMD zero-norm gradient guard
}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::erm: return "erm";
    case Method::cmd: return "cmd";
    case Method::gconda: return "gconda";
    case Method::gconda_pp: return "gconda_pp";
    case Method::gconda_dirl: return "gconda_dirl";
  }
  return "erm";
}

Method method_from_name(const std::string& name) {
  if (name == "erm") return Method::erm;
  if (name == "cmd") return Method::cmd;
  if (name == "gconda") return Method::gconda;
  if (name == "gconda_pp") return Method::gconda_pp;
  if (name == "gconda_dirl") return Method::gconda_dirl;
  throw std::invalid_argument("unknown method: " + name);
}

void TrainConfig::validate() const {
  if (lambda < 0.0 || alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("TrainConfig: negative weight");
  if (k_moments < 1) throw std::invalid_argument("TrainConfig: k_moments must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (!(val_fraction > 0.0) || val_fraction > 0.5)
    throw std::invalid_argument("TrainConfig: val_fraction must be in (0, 0.5]");
  switch (method) {
    case Method::gconda:
      if (alpha != 0.0 || !(beta > 0.0))
        throw std::invalid_argument("TrainConfig: gconda requires alpha=0, beta>0");
      break;
    case Method::gconda_dirl:
      if (beta != 0.0 || !(alpha > 0.0))
        throw std::invalid_argument("TrainConfig: gconda_dirl requires beta=0, alpha>0");
      break;
    case Method::gconda_pp:
      if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("TrainConfig: gconda_pp requires alpha>0 and beta>0");
      break;
    default:
      break;
  }
}

std::string TrainConfig::serialize() const {
  std::ostringstream out;
  out << "method=" << method_name(method) << "\n";
  out << "lambda=" << format_double(lambda) << "\n";
  out << "alpha=" << format_double(alpha) << "\n";
  out << "beta=" << format_double(beta) << "\n";
  out << "k_moments=" << k_moments << "\n";
  out << "epochs=" << epochs << "\n";
  out << "lr=" << format_double(lr) << "\n";
  out << "seed=" << seed << "\n";
  out << "val_fraction=" << format_double(val_fraction) << "\n";
  out << "hidden=";
  for (std::size_t i = 0; i < hidden.size(); ++i) out << (i ? ":" : "") << hidden[i];
  out << "\n";
  out << "activation="
      << (activation == Activation::silu ? "silu"
                                         : activation == Activation::relu ? "relu" : "identity")
      << "\n";
  out << "adjacency="
      << (adjacency == AdjMode::sym_selfloop
              ? "sym_selfloop"
              : adjacency == AdjMode::row_mean ? "row_mean" : "identity")
      << "\n";
  return out.str();
}

std::uint64_t TrainConfig::config_hash() const { return fnv1a64(serialize()); }

CmdResult cmd_discrepancy(const Matrix& a, const Matrix& b, int k_moments) {
  if (a.cols != b.cols) throw std::invalid_argument("cmd_discrepancy: dim mismatch");
  if (a.rows < 1 || b.rows < 1) throw std::invalid_argument("cmd_discrepancy: empty input");
  if (k_moments < 1) throw std::invalid_argument("cmd_discrepancy: k_moments must be >= 1");
  const int d = a.cols;

  auto col_means = [](const Matrix& m) {
    std::vector<double> mu(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
      const double* r = m.row(i);
      for (int j = 0; j < m.cols; ++j) mu[j] += r[j];
    }
    for (double& v : mu) v /= static_cast<double>(m.rows);
    return mu;
  };
  // central[k][j] = k-th coordinatewise central moment, k = 0..K
  auto central_moments = [&](const Matrix& m, const std::vector<double>& mu) {
    std::vector<std::vector<double>> c(k_moments + 1, std::vector<double>(d, 0.0));
    c[0].assign(d, 1.0);
    for (int i = 0; i < m.rows; ++i) {
      const double* r = m.row(i);
      for (int j = 0; j < d; ++j) {
        double x = r[j] - mu[j];
        double pw = x;
        for (int k = 2; k <= k_moments; ++k) {
          pw *= x;
          c[k][j] += pw;
        }
      }
    }
    for (int k = 2; k <= k_moments; ++k)
      for (int j = 0; j < d; ++j) c[k][j] /= static_cast<double>(m.rows);
    return c;
  };

  std::vector<double> mu_a = col_means(a), mu_b = col_means(b);
  auto ca = central_moments(a, mu_a);
  auto cb = central_moments(b, mu_b);

  CmdResult res;
  res.d_a = Matrix(a.rows, d);
  res.d_b = Matrix(b.rows, d);

  // Mean term.
  std::vector<double> diff(d);
  for (int j = 0; j < d; ++j) diff[j] = mu_a[j] - mu_b[j];
  double t1 = norm2(diff);
  res.value += t1;
  if (t1 > kNormGuard) {
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < d; ++j) res.d_a(i, j) += diff[j] / (t1 * a.rows);
    for (int i = 0; i < b.rows; ++i)
      for (int j = 0; j < d; ++j) res.d_b(i, j) -= diff[j] / (t1 * b.rows);
  }

  // Central-moment terms; dc_k/dx_ij = (k/n) ((x_ij - mu_j)^{k-1} - c_{k-1,j}).
  for (int k = 2; k <= k_moments; ++k) {
    for (int j = 0; j < d; ++j) diff[j] = ca[k][j] - cb[k][j];
    double tk = norm2(diff);
    res.value += tk;
    if (tk <= kNormGuard) continue;
    auto add_grad = [&](const Matrix& m, const std::vector<double>& mu,
                        const std::vector<std::vector<double>>& c, Matrix& grad, double sign) {
      const double scale = sign * static_cast<double>(k) / (tk * m.rows);
      for (int i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        double* gi = grad.row(i);
        for (int j = 0; j < d; ++j) {
          double x = r[j] - mu[j];
          double pw = 1.0;
          for (int t = 1; t <= k - 1; ++t) pw *= x;
          gi[j] += scale * diff[j] * (pw - c[k - 1][j]);
        }
      }
    };
    add_grad(a, mu_a, ca, res.d_a, 1.0);
    add_grad(b, mu_b, cb, res.d_b, -1.0);
  }
  return res;
}

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* src = m.row(idx[i]);
    double* dst = out.row(static_cast<int>(i));
    for (int j = 0; j < m.cols; ++j) dst[j] = src[j];
  }
  return out;
}

void scatter_add_rows(Matrix& full, const std::vector<int>& idx, const Matrix& part,
                      double scale) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double* dst = full.row(idx[i]);
    const double* src = part.row(static_cast<int>(i));
    for (int j = 0; j < full.cols; ++j) dst[j] += scale * src[j];
  }
}

std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

bool needs_target(Method m) { return m != Method::erm; }

bool is_ot_method(Method m) {
  return m == Method::gconda || m == Method::gconda_pp || m == Method::gconda_dirl;
}

Matrix one_hot_rows(const std::vector<int>& labels, const std::vector<int>& idx, int n_classes) {
  Matrix y(static_cast<int>(idx.size()), n_classes);
  for (std::size_t i = 0; i < idx.size(); ++i) y(static_cast<int>(i), (labels[idx[i]] + 1) / 2) = 1.0;
  return y;
}

}  // namespace

LossBreakdown compute_loss_and_grads(const GcnModel& model, const TrainConfig& cfg,
                                     const AdjacencyOp& adj_s, const Matrix& x_s,
                                     const std::vector<int>& y_s,
                                     const std::vector<int>& train_idx,
                                     const AdjacencyOp* adj_t, const Matrix* x_t,
                                     const TransportPlan* plan,
                                     const std::vector<int>* tgt_idx, Gradients& out) {
  LossBreakdown lb;
  TapeCache cache_s;
  Matrix logits_s = forward(model, adj_s, x_s, &cache_s);
  Matrix dlogits_s;
  lb.source_ce = cross_entropy(logits_s, y_s, train_idx, &dlogits_s);
  lb.total = lb.source_ce;

  const bool use_reg = cfg.lambda > 0.0 && needs_target(cfg.method);
  if (!use_reg) {
    backward(model, adj_s, x_s, cache_s, dlogits_s, nullptr, out);
    lb.finite = std::isfinite(lb.total) && out.all_finite();
    return lb;
  }

  if (!adj_t || !x_t) throw std::invalid_argument("compute_loss_and_grads: missing target batch");
  TapeCache cache_t;
  Matrix logits_t = forward(model, *adj_t, *x_t, &cache_t);
  const Matrix& h_s = model.layers.empty() ? x_s : cache_s.act.back();
  const Matrix& h_t = model.layers.empty() ? *x_t : cache_t.act.back();

  Matrix dh_s(h_s.rows, h_s.cols), dh_t(h_t.rows, h_t.cols);
  Matrix dlogits_t(logits_t.rows, logits_t.cols);

  if (cfg.method == Method::cmd) {
    CmdResult cmd = cmd_discrepancy(gather_rows(h_s, train_idx), h_t, cfg.k_moments);
    lb.reg = cmd.value;
    scatter_add_rows(dh_s, train_idx, cmd.d_a, cfg.lambda);
    add_inplace(dh_t, cmd.d_b, cfg.lambda);
  } else {
    if (!plan || !tgt_idx) throw std::invalid_argument("compute_loss_and_grads: missing plan");
    const int nc = static_cast<int>(train_idx.size());
    if (plan->gamma.rows != nc || static_cast<int>(tgt_idx->size()) != nc)
      throw std::invalid_argument("compute_loss_and_grads: coupling size mismatch");
    Matrix probs_t = softmax_rows(logits_t);
    double reg = 0.0;
    for (int i = 0; i < nc; ++i) {
      const int si = train_idx[i];
      const int cls = (y_s[si] + 1) / 2;
      const double* hi = h_s.row(si);
      for (int j = 0; j < nc; ++j) {
        double g = plan->gamma(i, j);
        if (g == 0.0) continue;
        const int tj = (*tgt_idx)[j];
        if (cfg.alpha > 0.0) {
          const double* hj = h_t.row(tj);
          double sq = 0.0;
          double* dsi = dh_s.row(si);
          double* dtj = dh_t.row(tj);
          const double w = cfg.lambda * cfg.alpha * g * 2.0;
          for (int c = 0; c < h_s.cols; ++c) {
            double dlt = hi[c] - hj[c];
            sq += dlt * dlt;
            dsi[c] += w * dlt;
            dtj[c] -= w * dlt;
          }
          reg += cfg.alpha * g * sq;
        }
        if (cfg.beta > 0.0) {
          const double* pj = probs_t.row(tj);
          double pc = pj[cls];
          reg += cfg.beta * g * -std::log(std::max(pc, kProbClamp));
          if (pc > kProbClamp) {
            double* dj = dlogits_t.row(tj);
            const double w = cfg.lambda * cfg.beta * g;
            for (int c = 0; c < logits_t.cols; ++c) dj[c] += w * pj[c];
            dj[cls] -= w;
          }
        }
      }
    }
    lb.reg = reg;
  }

  lb.total = lb.source_ce + cfg.lambda * lb.reg;
  backward(model, adj_s, x_s, cache_s, dlogits_s, &dh_s, out);
  backward(model, *adj_t, *x_t, cache_t, dlogits_t, &dh_t, out);
  lb.finite = std::isfinite(lb.total) && out.all_finite();
  return lb;
}

namespace {

// Stratified split of the source nodes: per class, floor(frac * count)
// validation nodes (at least one), sampled without replacement.
void split_nodes(const std::vector<int>& labels, double frac, RngState& rng,
                 std::vector<int>& train_idx, std::vector<int>& val_idx) {
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] > 0 ? pos : neg).push_back(static_cast<int>(i));
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("split_nodes: need both classes on the source graph");
  std::vector<char> is_val(labels.size(), 0);
  for (const std::vector<int>* cls : {&neg, &pos}) {
    int k = std::max(1, static_cast<int>(std::floor(frac * cls->size())));
    if (k >= static_cast<int>(cls->size()))
      throw std::invalid_argument("split_nodes: class too small for the split");
    std::vector<int> picks = sample_without_replacement(rng, static_cast<int>(cls->size()), k);
    for (int p : picks) is_val[(*cls)[p]] = 1;
  }
  train_idx.clear();
  val_idx.clear();
  for (std::size_t i = 0; i < labels.size(); ++i)
    (is_val[i] ? val_idx : train_idx).push_back(static_cast<int>(i));
}

double val_auc_of(const GcnModel& model, const AdjacencyOp& adj, const Matrix& x,
                  const std::vector<int>& labels, const std::vector<int>& val_idx) {
  Matrix logits = forward(model, adj, x, nullptr);
  Matrix probs = softmax_rows(logits);
  std::vector<double> scores;
  std::vector<int> lab;
  scores.reserve(val_idx.size());
  lab.reserve(val_idx.size());
  for (int i : val_idx) {
    scores.push_back(probs(i, 1));
    lab.push_back(labels[i]);
  }
  return roc_auc(scores, lab);
}

}  // namespace

TrainReport train(const TrainConfig& cfg, const Graph& g_src, const Graph& g_tgt) {
  cfg.validate();
  if (g_src.d != g_tgt.d) throw std::invalid_argument("train: feature dims differ");

  TrainReport report;
  AdjacencyOp adj_s = normalize_adjacency(g_src, cfg.adjacency);
  AdjacencyOp adj_t = normalize_adjacency(g_tgt, cfg.adjacency);

  RngState base(cfg.seed);
  RngState init_rng = base.derive(1);
  RngState split_rng = base.derive(2);
  RngState sub_rng = base.derive(3);

  GcnModel model = make_model(g_src.d, cfg.hidden, 2, cfg.activation, init_rng);
  AdamState adam = AdamState::zeros_like(model);

  std::vector<int> train_idx, val_idx;
  split_nodes(g_src.labels, cfg.val_fraction, split_rng, train_idx, val_idx);

  const bool ot = is_ot_method(cfg.method) && cfg.lambda > 0.0;
  const bool tgt_needed = needs_target(cfg.method) && cfg.lambda > 0.0;
  // The alignment weight ramps up over the first quarter of the budget:
  // coupling half-trained predictions at full strength can lock in a wrong
  // labeling of the target nodes before the source loss has shaped them.
  const int ramp_window = std::max(1, cfg.epochs / 4);
  double best_auc = -1.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    TransportPlan plan;
    std::vector<int> tgt_idx;
    const TransportPlan* plan_ptr = nullptr;
    const std::vector<int>* tgt_idx_ptr = nullptr;

    if (ot) {
      tgt_idx = sample_without_replacement(sub_rng, g_tgt.n, static_cast<int>(train_idx.size()));
      TapeCache cache_s, cache_t;
      Matrix logits_s = forward(model, adj_s, g_src.features, &cache_s);
      Matrix logits_t = forward(model, adj_t, g_tgt.features, &cache_t);
      const Matrix& h_s = model.layers.empty() ? g_src.features : cache_s.act.back();
      const Matrix& h_t = model.layers.empty() ? g_tgt.features : cache_t.act.back();
      Matrix y_onehot = one_hot_rows(g_src.labels, train_idx, 2);
      Matrix p_sub = softmax_rows(logits_t);
      Matrix cost = cost_joint(gather_rows(h_s, train_idx), y_onehot,
                               gather_rows(h_t, tgt_idx), gather_rows(p_sub, tgt_idx),
                               cfg.alpha, cfg.beta);
      plan = solve_emd(cost);
      plan_ptr = &plan;
      tgt_idx_ptr = &tgt_idx;
    }

    TrainConfig cfg_t = cfg;
    cfg_t.lambda =
        cfg.lambda * std::min(1.0, static_cast<double>(epoch + 1) / ramp_window);
    Gradients grads = Gradients::zeros_like(model);
    LossBreakdown lb = compute_loss_and_grads(
        model, cfg_t, adj_s, g_src.features, g_src.labels, train_idx,
        tgt_needed ? &adj_t : nullptr, tgt_needed ? &g_tgt.features : nullptr, plan_ptr,
        tgt_idx_ptr, grads);

    if (!lb.finite) {
      report.ok = false;
      report.note = "non-finite loss at epoch " + std::to_string(epoch);
      return report;
    }

    adam_step(model, grads, adam, cfg.lr);

    EpochStats st;
    st.source_ce = lb.source_ce;
    st.discrepancy = lb.reg;
    st.val_auc = val_auc_of(model, adj_s, g_src.features, g_src.labels, val_idx);
    report.history.push_back(st);
    // Ties go to the later epoch: on an easy source the val AUC saturates
    // quickly, and the longer-trained model reflects the full objective.
    if (st.val_auc >= best_auc) {
      best_auc = st.val_auc;
      report.chosen_epoch = epoch;
      report.model = model;
    }
  }
  return report;
}

EvalMetrics evaluate(const GcnModel& model, const Graph& g, AdjMode adjacency) {
  AdjacencyOp adj = normalize_adjacency(g, adjacency);
  Matrix logits = forward(model, adj, g.features, nullptr);
  Matrix probs = softmax_rows(logits);

  EvalMetrics m;
  std::vector<int> idx = all_indices(g.n);
  m.logloss = cross_entropy(logits, g.labels, idx, nullptr);
  int correct = 0;
  std::vector<double> scores(g.n);
  for (int i = 0; i < g.n; ++i) {
    scores[i] = probs(i, 1);
    int pred = probs(i, 1) > probs(i, 0) ? 1 : -1;
    if (pred == g.labels[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(g.n);
  try {
    m.auc = roc_auc(scores, g.labels);
  } catch (const UndefinedMetricError&) {
    m.auc = std::nullopt;
  }
  return m;
}

PairMetrics pair_metrics(const GcnModel& model, const Graph& g_src, const Graph& g_tgt,
                         const TrainConfig& cfg) {
  if (g_src.n != g_tgt.n)
    throw std::invalid_argument("pair_metrics: node counts differ (uniform coupling)");
  AdjacencyOp adj_s = normalize_adjacency(g_src, cfg.adjacency);
  AdjacencyOp adj_t = normalize_adjacency(g_tgt, cfg.adjacency);
  TapeCache cache_s, cache_t;
  forward(model, adj_s, g_src.features, &cache_s);
  Matrix logits_t = forward(model, adj_t, g_tgt.features, &cache_t);
  const Matrix& h_s = model.layers.empty() ? g_src.features : cache_s.act.back();
  const Matrix& h_t = model.layers.empty() ? g_tgt.features : cache_t.act.back();

  Matrix y_onehot = one_hot_rows(g_src.labels, all_indices(g_src.n), 2);
  Matrix cost = cost_label(y_onehot, softmax_rows(logits_t));
  PairMetrics pm;
  pm.w1_hat = solve_emd(cost).total_cost;
  pm.cmd_value = cmd_discrepancy(h_s, h_t, cfg.k_moments).value;
  return pm;
}

Graph sample_batch(const Graph& g, int size, RngState& rng) {
  if (size < 1 || size > g.n) throw std::invalid_argument("sample_batch: bad size");
  std::vector<int> keep = sample_without_replacement(rng, g.n, size);
  std::vector<int> remap(g.n, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = static_cast<int>(i);

  Graph out;
  out.n = size;
  out.d = g.d;
  out.mu = g.mu;
  out.labels.resize(size);
  out.features = Matrix(size, g.d);
  for (int i = 0; i < size; ++i) {
    out.labels[i] = g.labels[keep[i]];
    const double* src = g.features.row(keep[i]);
    double* dst = out.features.row(i);
    for (int j = 0; j < g.d; ++j) dst[j] = src[j];
  }
  for (const auto& [i, j] : g.edges) {
    if (remap[i] >= 0 && remap[j] >= 0) out.edges.emplace_back(remap[i], remap[j]);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace gcl
