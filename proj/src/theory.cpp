#include "gcl/theory.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gcl/stats.hpp"

namespace gcl {

void ShiftInputs::validate() const {
  if (!(m > 0.0)) throw std::invalid_argument("ShiftInputs: m must be positive");
  if (!(r_src > 0.0) || !(r_tgt > 0.0))
    throw std::invalid_argument("ShiftInputs: ratios must be positive");
  if (D_src < 1.0 || D_tgt < 1.0)
    throw std::invalid_argument("ShiftInputs: average degrees must be >= 1");
  if (!std::isfinite(delta) || delta < 0.0)
    throw std::invalid_argument("ShiftInputs: delta must be finite and nonnegative");
}

ShiftInputs inputs_from(const CsbmParams& src, const ShiftSpec& spec) {
  ShiftInputs inp;
  inp.m = src.signal;
  inp.delta = spec.delta;
  inp.r_src = src.ratio;
  inp.r_tgt = spec.ratio_target;
  inp.D_src = src.avg_degree;
  inp.D_tgt = spec.degree_target;
  return inp;
}

namespace {

// Structure term a = sqrt(D')*((r'-1)/(r'+1))*m and translation term
// b = sqrt(D')*delta*m.
double structure_term(const ShiftInputs& inp) {
  return std::sqrt(inp.D_tgt) * ((inp.r_tgt - 1.0) / (inp.r_tgt + 1.0)) * inp.m;
}

double translation_term(const ShiftInputs& inp) {
  return std::sqrt(inp.D_tgt) * inp.delta * inp.m;
}

}  // namespace

std::pair<double, double> latent_centroids(const ShiftInputs& inp) {
  inp.validate();
  double a = structure_term(inp);
  double b = translation_term(inp);
  return {a - b, -a - b};
}

double conditional_shift_x(double m, double delta) {
  if (!(m > 0.0)) throw std::invalid_argument("conditional_shift_x: m must be positive");
  return (std_normal_cdf((1.0 + delta) * m) - std_normal_cdf((1.0 - delta) * m)) / 2.0;
}

double conditional_shift_h(const ShiftInputs& inp) {
  auto [s1, s_neg1] = latent_centroids(inp);
  double v = (std_normal_cdf(-s_neg1) - std_normal_cdf(s1)) / 2.0;
  return v < 0.0 ? 0.0 : v;
}

double conditional_shift_h_norm(const ShiftInputs& inp) {
  auto [s1, s_neg1] = latent_centroids(inp);
  return (std_normal_cdf(std::fabs(s_neg1)) - std_normal_cdf(std::fabs(s1))) / 2.0;
}

double expected_error_f(double m, double delta) {
  if (!(m > 0.0)) throw std::invalid_argument("expected_error_f: m must be positive");
  return 1.0 - (std_normal_cdf((1.0 + delta) * m) + std_normal_cdf((1.0 - delta) * m)) / 2.0;
}

double expected_error_fg(const ShiftInputs& inp) {
  auto [s1, s_neg1] = latent_centroids(inp);
  return 1.0 - (std_normal_cdf(-s_neg1) + std_normal_cdf(s1)) / 2.0;
}

double source_error_f(double m) {
  if (!(m > 0.0)) throw std::invalid_argument("source_error_f: m must be positive");
  return 1.0 - std_normal_cdf(m);
}

double source_error_fg(const ShiftInputs& inp) {
  inp.validate();
  return 1.0 - std_normal_cdf(structure_term(inp));
}

ClosedFormReport closed_form_report(const ShiftInputs& inp) {
  ClosedFormReport rep;
  auto [s1, s_neg1] = latent_centroids(inp);
  rep.s1 = s1;
  rep.s_neg1 = s_neg1;
  rep.delta_yx = conditional_shift_x(inp.m, inp.delta);
  double raw_yh = (std_normal_cdf(-s_neg1) - std_normal_cdf(s1)) / 2.0;
  rep.clamped = raw_yh < 0.0;
  rep.delta_yh = rep.clamped ? 0.0 : raw_yh;
  rep.eps_t_f = expected_error_f(inp.m, inp.delta);
  rep.eps_t_fg = expected_error_fg(inp);
  rep.eps_s_f = source_error_f(inp.m);
  rep.eps_s_fg = source_error_fg(inp);
  return rep;
}

namespace {

struct Counter {
  std::int64_t hits = 0;
  std::int64_t total = 0;
  void add(bool hit) {
    hits += hit ? 1 : 0;
    ++total;
  }
  McEstimate finish() const {
    McEstimate e;
    e.count = hits;
    e.total = total;
    if (total > 0) {
      e.estimate = static_cast<double>(hits) / static_cast<double>(total);
      e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(total));
    }
    return e;
  }
};

// Classifier pair on the scalar projection u. The source rule is u > 0.
// The target rule depends on the centroid pair (c1, c_neg1):
//   shift_aligned: u > (c1 + c_neg1)/2 (translated source hyperplane);
//   bayes: orientation follows the centroid ordering, same threshold.
struct RulePair {
  double threshold = 0.0;
  double orient = 1.0;  // +1 keeps source orientation, -1 flips

  static RulePair make(double c1, double c_neg1, TargetRule rule) {
    RulePair rp;
    rp.threshold = (c1 + c_neg1) / 2.0;
    if (rule == TargetRule::bayes && c1 < c_neg1) rp.orient = -1.0;
    return rp;
  }
  int source(double u) const { return u > 0.0 ? 1 : -1; }
  int target(double u) const { return orient * (u - threshold) > 0.0 ? 1 : -1; }
};

}  // namespace

McEstimate mc_conditional_shift_feature(double m, double delta, std::int64_t n_samples,
                                        RngState& rng, TargetRule rule) {
  if (!(m > 0.0)) throw std::invalid_argument("mc_conditional_shift_feature: m must be positive");
  if (n_samples < 1) throw std::invalid_argument("mc_conditional_shift_feature: n_samples < 1");
  const double c1 = (1.0 - delta) * m;
  const double c_neg1 = -(1.0 + delta) * m;
  const RulePair rp = RulePair::make(c1, c_neg1, rule);
  Counter cnt;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    bool pos = (rng.next_u64() & 1) != 0;
    double u = (pos ? c1 : c_neg1) + rng.normal();
    cnt.add(rp.source(u) != rp.target(u));
  }
  return cnt.finish();
}

McEstimate mc_expected_error_feature(double m, double delta, std::int64_t n_samples,
                                     RngState& rng) {
  if (!(m > 0.0)) throw std::invalid_argument("mc_expected_error_feature: m must be positive");
  if (n_samples < 1) throw std::invalid_argument("mc_expected_error_feature: n_samples < 1");
  const double c1 = (1.0 - delta) * m;
  const double c_neg1 = -(1.0 + delta) * m;
  Counter cnt;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    bool pos = (rng.next_u64() & 1) != 0;
    double u = (pos ? c1 : c_neg1) + rng.normal();
    int label = pos ? 1 : -1;
    cnt.add((u > 0.0 ? 1 : -1) != label);
  }
  return cnt.finish();
}

namespace {

// One batch of target graphs at the given translation strength; counts
// target-vs-source rule disagreement and source-rule error on the latent
// projections. Each node's latent value follows the one-layer aggregation
// law: mean sqrt(deg_i) * (class mix at the exact edge-probability
// proportions), unit noise. The noise reuses the node's own drawn feature
// residual (exactly N(0,1), independent of the structure), so the batch
// consumes the same rng stream as the raw graph draw. Isolated nodes keep
// the raw feature law.
void run_graph_batch(const ShiftInputs& inp, double delta, int n_graphs, int n_nodes,
                     RngState& rng, TargetRule rule, Counter& disagree, Counter& err) {
  CsbmParams tgt;
  tgt.n = n_nodes;
  tgt.d = 1;
  tgt.avg_degree = inp.D_tgt;
  tgt.ratio = inp.r_tgt;
  tgt.signal = inp.m;
  tgt.sigma = 1.0;
  tgt.validate();

  // Scalar class means after translation, and the idealized latent centroid
  // pair that fixes the target rule's threshold/orientation.
  const double m = inp.m;
  const double c_pos = (1.0 - delta) * m;
  const double c_neg = -(1.0 + delta) * m;
  const std::vector<double> mu_pos{c_pos};
  const std::vector<double> mu_neg{c_neg};
  const std::vector<double> mu_rec{m};
  const double root_d = std::sqrt(inp.D_tgt);
  const double structure = (inp.r_tgt - 1.0) / (inp.r_tgt + 1.0);
  const double a = root_d * structure * m;
  const double b = root_d * delta * m;
  const RulePair rp = RulePair::make(a - b, -a - b, rule);

  // Latent class-mean slopes per unit sqrt(degree): the neighbor mix at
  // proportions p/(p+q) vs q/(p+q) averages the two translated class means.
  const double slope_pos = (structure - delta) * m;
  const double slope_neg = (-structure - delta) * m;

  for (int gi = 0; gi < n_graphs; ++gi) {
    Graph g = generate_with_means(tgt.n, 1, tgt.p(), tgt.q(), mu_pos, mu_neg, 1.0, mu_rec,
                                  false, rng);
    std::vector<int> deg(g.n, 0);
    for (const auto& [i, j] : g.edges) {
      ++deg[i];
      ++deg[j];
    }
    for (int i = 0; i < g.n; ++i) {
      bool pos = g.labels[i] == 1;
      double noise = g.features(i, 0) - (pos ? c_pos : c_neg);
      double h;
      if (deg[i] == 0) {
        h = g.features(i, 0);
      } else {
        double slope = pos ? slope_pos : slope_neg;
        h = std::sqrt(static_cast<double>(deg[i])) * slope + noise;
      }
      disagree.add(rp.source(h) != rp.target(h));
      err.add(rp.source(h) != g.labels[i]);
    }
  }
}

}  // namespace

GraphMcReport mc_graph_report(const ShiftInputs& inp, int n_graphs, int n_nodes, RngState& rng,
                              TargetRule rule) {
  inp.validate();
  if (n_graphs < 1) throw std::invalid_argument("mc_graph_report: n_graphs < 1");
  if (n_nodes < 2) throw std::invalid_argument("mc_graph_report: n_nodes < 2");

  GraphMcReport rep;
  Counter disagree, err_t, disagree0, err_s;
  run_graph_batch(inp, inp.delta, n_graphs, n_nodes, rng, rule, disagree, err_t);
  run_graph_batch(inp, 0.0, n_graphs, n_nodes, rng, rule, disagree0, err_s);
  rep.delta_yh = disagree.finish();
  rep.eps_t_fg = err_t.finish();
  rep.eps_s_fg = err_s.finish();
  return rep;
}

McEstimate mc_conditional_shift_graph(const ShiftInputs& inp, int n_graphs, int n_nodes,
                                      RngState& rng, TargetRule rule) {
  return mc_graph_report(inp, n_graphs, n_nodes, rng, rule).delta_yh;
}

McEstimate mc_expected_error_graph(const ShiftInputs& inp, int n_graphs, int n_nodes,
                                   RngState& rng) {
  return mc_graph_report(inp, n_graphs, n_nodes, rng).eps_t_fg;
}

}  // namespace gcl
