#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gcl/matrix.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// Two-class stochastic block model with Gaussian node features.
// Edge probabilities are derived from the target average degree D and the
// intra/inter ratio r = p/q:  q = 2D / (n (1 + r)),  p = r q.
struct CsbmParams {
  int n = 128;            // node count, even
  int d = 128;            // feature dimension
  double avg_degree = 10; // D
  double ratio = 5.0;     // r = p/q
  double signal = 1.0;    // m = ||mu|| / sigma
  double sigma = 1.0;     // per-coordinate feature noise std
  bool bernoulli_labels = false;  // i.i.d. Ber(0.5) labels instead of a balanced split

  double q() const { return 2.0 * avg_degree / (static_cast<double>(n) * (1.0 + ratio)); }
  double p() const { return ratio * q(); }
  void validate() const;
};

// Target-side perturbation: translate class means by delta along mu, rotate
// both means by theta degrees in a plane through mu, and change the block
// structure to (ratio_target, degree_target).
struct ShiftSpec {
  double delta = 0.0;
  double theta_deg = 0.0;
  double ratio_target = 5.0;
  double degree_target = 10.0;

  static ShiftSpec identity(const CsbmParams& src) {
    return ShiftSpec{0.0, 0.0, src.ratio, src.avg_degree};
  }
};

struct Graph {
  int n = 0;
  int d = 0;
  Matrix features;                        // n x d
  std::vector<int> labels;                // entries in {-1, +1}
  std::vector<std::pair<int, int>> edges; // undirected, i < j, sorted, unique
  std::vector<double> mu;                 // generating class-mean direction (pre-shift)

  bool operator==(const Graph& other) const;
};

// Source-domain CSBM draw: mean direction sampled with per-coordinate std
// 1/sqrt(d), rescaled so ||mu|| = signal * sigma; class means are +-mu.
Graph generate_csbm(const CsbmParams& params, RngState& rng);

// Class means after applying a shift: ((1-delta) mu, -(1+delta) mu), both
// rotated by theta degrees in the plane spanned by mu and one rng-drawn
// orthogonal direction. Rotation preserves the norms exactly.
std::pair<std::vector<double>, std::vector<double>> shift_mean(
    const std::vector<double>& mu, const ShiftSpec& spec, RngState& rng);

// Source graph from `src` plus a target graph sharing the same mu (post
// shift) with the target-side block structure. Same n and d on both.
std::pair<Graph, Graph> generate_shifted_pair(const CsbmParams& src, const ShiftSpec& spec,
                                              RngState& rng);

// Fraction of edges joining same-label endpoints.
double edge_homophily(const Graph& g);

void write_graph(const Graph& g, const std::string& path);
Graph read_graph(const std::string& path);

// Shared generator core: explicit per-class means, explicit block structure.
// `mu_record` is stored in Graph::mu.
Graph generate_with_means(int n, int d, double p, double q, const std::vector<double>& mu_pos,
                          const std::vector<double>& mu_neg, double sigma,
                          const std::vector<double>& mu_record, bool bernoulli_labels,
                          RngState& rng);

}  // namespace gcl
