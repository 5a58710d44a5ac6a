#pragma once

#include <cstdint>
#include <utility>

#include "gcl/csbm.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// Inputs to the closed-form shift and error formulas. Only the target-side
// structure (r_tgt, D_tgt) enters the latent formulas; the source side is
// carried for the structure-flip diagnostics.
struct ShiftInputs {
  double m = 1.0;       // ||mu|| / sigma
  double delta = 0.0;   // class-mean translation strength
  double r_src = 5.0;   // source intra/inter edge ratio p/q
  double r_tgt = 5.0;   // target ratio p'/q'
  double D_src = 10.0;  // source average degree
  double D_tgt = 10.0;  // target average degree

  void validate() const;
};

ShiftInputs inputs_from(const CsbmParams& src, const ShiftSpec& spec);

struct ClosedFormReport {
  double s1 = 0.0;        // latent centroid of class +1, projected onto mu/||mu||
  double s_neg1 = 0.0;    // same for class -1 (signed)
  double delta_yx = 0.0;  // feature-level conditional shift
  double delta_yh = 0.0;  // latent-level conditional shift (clamped at 0)
  double eps_t_f = 0.0;   // target error of the source-optimal feature rule
  double eps_t_fg = 0.0;  // target error of the source-optimal latent rule
  double eps_s_f = 0.0;   // source error, feature rule
  double eps_s_fg = 0.0;  // latent baseline at delta=0 with the target structure
  bool clamped = false;   // delta_yh was negative before clamping
};

// Signed projections (s1, s_neg1) of the target latent class centroids onto
// mu/||mu||: s1 = sqrt(D')*((r'-1)/(r'+1))*m - sqrt(D')*delta*m and
// s_neg1 = -sqrt(D')*((r'-1)/(r'+1))*m - sqrt(D')*delta*m.
std::pair<double, double> latent_centroids(const ShiftInputs& inp);

// (Phi((1+delta) m) - Phi((1-delta) m)) / 2, signed arguments.
double conditional_shift_x(double m, double delta);

// (Phi(-s_neg1) - Phi(s1)) / 2 with signed projections, clamped at 0.
double conditional_shift_h(const ShiftInputs& inp);

// Literal-magnitude variant (Phi(|s_neg1|) - Phi(|s1|)) / 2, unclamped;
// kept for side-by-side comparison with the signed convention, which is the
// one that matches the sampling oracles in orientation-flip regimes.
double conditional_shift_h_norm(const ShiftInputs& inp);

// 1 - (Phi((1+delta) m) + Phi((1-delta) m)) / 2.
double expected_error_f(double m, double delta);

// 1 - (Phi(-s_neg1) + Phi(s1)) / 2.
double expected_error_fg(const ShiftInputs& inp);

// Source-side baselines: 1 - Phi(m), and the latent rule's error on a
// delta=0 graph with the *target* block structure, 1 - Phi(a). The latter
// makes the gap |eps_t - eps_s| isolate the translation component, which is
// what the shift bound controls.
double source_error_f(double m);
double source_error_fg(const ShiftInputs& inp);

ClosedFormReport closed_form_report(const ShiftInputs& inp);

// Target-side classifier used by the sampling oracles.
//   shift_aligned: the source hyperplane translated by the latent mean
//                  shift (threshold at the centroid midpoint, orientation
//                  kept). This is the rule the closed forms describe.
//   bayes:         likelihood-ratio rule between the two target centroids;
//                  flips orientation when the target structure flips the
//                  centroid ordering (r' < 1).
enum class TargetRule { shift_aligned, bayes };

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;     // binomial
  std::int64_t count = 0;     // favorable outcomes
  std::int64_t total = 0;
};

// Feature-level oracles. Both classifiers depend on the features only
// through the scalar projection mu^T x / (sigma ||mu||), whose law under
// each class is an exactly known unit-variance Gaussian, so the oracle
// draws that scalar directly.
McEstimate mc_conditional_shift_feature(double m, double delta, std::int64_t n_samples,
                                        RngState& rng,
                                        TargetRule rule = TargetRule::shift_aligned);
McEstimate mc_expected_error_feature(double m, double delta, std::int64_t n_samples,
                                     RngState& rng);

// Graph-level oracle: draws target CSBM graphs and evaluates the classifier
// pair on each node's latent projection under the one-layer aggregation law
// (class mix at the exact edge-probability proportions, scaled by
// sqrt(deg_i) of the node's realized degree, unit noise; isolated nodes
// keep the raw feature law). Realized degrees are the finite-size effect
// the closed forms idealize with sqrt(D'). A second batch at delta=0 with
// the same block structure measures the source-side baseline. Projections
// are scalars, which is exact: both rules depend on the features only
// through the projection onto mu.
struct GraphMcReport {
  McEstimate delta_yh;
  McEstimate eps_t_fg;
  McEstimate eps_s_fg;
};
GraphMcReport mc_graph_report(const ShiftInputs& inp, int n_graphs, int n_nodes, RngState& rng,
                              TargetRule rule = TargetRule::shift_aligned);

// Thin wrappers over mc_graph_report for single quantities.
McEstimate mc_conditional_shift_graph(const ShiftInputs& inp, int n_graphs, int n_nodes,
                                      RngState& rng,
                                      TargetRule rule = TargetRule::shift_aligned);
McEstimate mc_expected_error_graph(const ShiftInputs& inp, int n_graphs, int n_nodes,
                                   RngState& rng);

}  // namespace gcl
