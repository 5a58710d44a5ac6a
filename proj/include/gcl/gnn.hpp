#pragma once

#include <string>
#include <vector>

#include "gcl/csbm.hpp"
#include "gcl/matrix.hpp"
#include "gcl/rng.hpp"

namespace gcl {

enum class Activation { silu, relu, identity };

enum class AdjMode {
  sym_selfloop,  // D^{-1/2} (A + I) D^{-1/2}, self-loops on every node
  row_mean,      // neighbor average, self-loop only on isolated nodes
  identity       // no propagation (MLP baseline)
};

// Sparse normalized propagation operator in CSR layout.
struct AdjacencyOp {
  int n = 0;
  AdjMode mode = AdjMode::identity;
  std::vector<int> row_ptr;       // n + 1
  std::vector<int> col_idx;
  std::vector<double> weight;
  std::vector<double> degree;     // per-node degree used by the theory rescale
                                  // (neighbor count, 1 for isolated nodes)

  Matrix apply(const Matrix& x) const;            // A x
  Matrix apply_transpose(const Matrix& x) const;  // A^T x
};

AdjacencyOp normalize_adjacency(const Graph& g, AdjMode mode);

// Propagation stack per layer k: H^k = act( A H^{k-1} W^k ), followed by a
// linear head logits = H^K Wh + bh. K may be zero (plain linear model).
struct GcnModel {
  std::vector<Matrix> layers;
  std::vector<Activation> acts;  // one per layer
  Matrix head_w;                 // last hidden dim x n_classes
  std::vector<double> head_b;

  int in_dim() const { return layers.empty() ? head_w.rows : layers.front().rows; }
  int out_dim() const { return head_w.cols; }
  void check() const;  // dims chain, weights finite

  bool operator==(const GcnModel& o) const {
    if (layers.size() != o.layers.size() || acts != o.acts || head_b != o.head_b) return false;
    for (std::size_t k = 0; k < layers.size(); ++k)
      if (!(layers[k].same_shape(o.layers[k]) && layers[k].data == o.layers[k].data))
        return false;
    return head_w.same_shape(o.head_w) && head_w.data == o.head_w.data;
  }
};

// Glorot-uniform weights, zero head bias.
GcnModel make_model(int in_dim, const std::vector<int>& hidden, int n_classes,
                    Activation act, RngState& rng);

// Stored intermediates of one forward pass, consumed by backward().
struct TapeCache {
  std::vector<Matrix> agg;  // Z^k = A H^{k-1}
  std::vector<Matrix> pre;  // P^k = Z^k W^k
  std::vector<Matrix> act;  // H^k = act(P^k)
};

// Logits (n x n_classes). The cache may be null when no backward pass will
// follow.
Matrix forward(const GcnModel& model, const AdjacencyOp& adj, const Matrix& x,
               TapeCache* cache);

struct Gradients {
  std::vector<Matrix> layers;
  Matrix head_w;
  std::vector<double> head_b;

  static Gradients zeros_like(const GcnModel& model);
  void accumulate(const Gradients& other, double scale = 1.0);
  bool all_finite() const;
};

// Reverse-mode pass for one branch. d_logits is dLoss/dlogits; d_h_final,
// when non-null, is an extra dLoss/dH^K term (embedding-level losses).
// Results are accumulated into `out`, so source and target branches can
// share one Gradients.
void backward(const GcnModel& model, const AdjacencyOp& adj, const Matrix& x,
              const TapeCache& cache, const Matrix& d_logits, const Matrix* d_h_final,
              Gradients& out);

// Row-wise stable softmax.
Matrix softmax_rows(const Matrix& logits);

// Mean cross-entropy of the rows listed in `idx` against {-1,+1} labels
// (class index (label+1)/2). Also emits dLoss/dlogits into d_logits when
// non-null (zero rows outside idx).
double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     const std::vector<int>& idx, Matrix* d_logits);

struct AdamState {
  std::vector<Matrix> m_layers, v_layers;
  Matrix m_head, v_head;
  std::vector<double> m_bias, v_bias;
  long step_count = 0;

  static AdamState zeros_like(const GcnModel& model);
};

void adam_step(GcnModel& model, const Gradients& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Weightless one-layer aggregation used by the closed-form verification:
// H_i = sqrt(deg_i) * mean of the neighbors' features. Requires row_mean
// mode (the operator carries the degrees).
Matrix theory_gcn_1layer(const AdjacencyOp& adj, const Matrix& x);

// Text checkpoint, exact round-trip (shortest round-trip decimals).
void save_model(const GcnModel& model, const std::string& path);
GcnModel load_model(const std::string& path);

}  // namespace gcl
