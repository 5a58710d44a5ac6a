#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcl/csbm.hpp"
#include "gcl/gnn.hpp"
#include "gcl/ot.hpp"

namespace gcl {

// ERM: source cross-entropy only.
// CMD: source CE + lambda * central-moment discrepancy between embeddings.
// The OT family couples source and target batches through a transport plan
// on a ground cost with an embedding term (weight alpha) and a label term
// (weight beta): gconda uses only the label term, gconda_dirl only the
// embedding term, gconda_pp both.
enum class Method { erm, cmd, gconda, gconda_pp, gconda_dirl };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct TrainConfig {
  Method method = Method::erm;
  double lambda = 1.0;   // regularizer weight (OT term or CMD term)
  double alpha = 0.0;    // embedding-distance weight inside the OT cost
  double beta = 0.0;     // label-cost weight inside the OT cost
  int k_moments = 5;     // CMD order
  int epochs = 200;
  double lr = 0.01;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  std::vector<int> hidden = {16, 16};
  Activation activation = Activation::silu;
  AdjMode adjacency = AdjMode::sym_selfloop;

  void validate() const;
  std::string serialize() const;      // stable key=value lines
  std::uint64_t config_hash() const;  // FNV-1a of serialize()
};

struct EpochStats {
  double source_ce = 0.0;
  double discrepancy = 0.0;  // unweighted OT cost or CMD value; 0 for ERM
  double val_auc = 0.0;
};

struct TrainReport {
  GcnModel model;  // snapshot of the best-validation epoch
  int chosen_epoch = -1;
  std::vector<EpochStats> history;
  bool ok = true;
  std::string note;  // diagnostic when ok is false
};

// Coordinatewise central-moment discrepancy between two row sets:
// ||mean(a) - mean(b)|| + sum_{k=2..K} ||c_k(a) - c_k(b)||, with exact
// gradients for both inputs. Norm terms below 1e-12 contribute zero
// gradient (the norm is not differentiable at 0).
struct CmdResult {
  double value = 0.0;
  Matrix d_a;
  Matrix d_b;
};
CmdResult cmd_discrepancy(const Matrix& a, const Matrix& b, int k_moments);

// One evaluation of the full training objective plus its exact gradients,
// with the transport plan (when present) held constant. train_idx selects
// the supervised source rows (and the OT coupling rows); tgt_idx the OT
// coupling columns. The same code path serves every method, so the
// finite-difference suite exercises exactly what training runs.
struct LossBreakdown {
  double total = 0.0;
  double source_ce = 0.0;
  double reg = 0.0;  // unweighted regularizer value
  bool finite = true;
};
LossBreakdown compute_loss_and_grads(const GcnModel& model, const TrainConfig& cfg,
                                     const AdjacencyOp& adj_s, const Matrix& x_s,
                                     const std::vector<int>& y_s,
                                     const std::vector<int>& train_idx,
                                     const AdjacencyOp* adj_t, const Matrix* x_t,
                                     const TransportPlan* plan,
                                     const std::vector<int>* tgt_idx, Gradients& out);

// Full training loop: stratified validation split of the source nodes,
// per-epoch plan solve for OT methods (target side subsampled to the train
// size so the coupling marginals stay uniform and equal), adaptive-moment
// updates, model selection by best validation AUC. Non-finite losses mark
// the report failed instead of throwing.
TrainReport train(const TrainConfig& cfg, const Graph& g_src, const Graph& g_tgt);

struct EvalMetrics {
  std::optional<double> auc;  // empty when the graph is single-class
  double logloss = 0.0;
  double accuracy = 0.0;
};
EvalMetrics evaluate(const GcnModel& model, const Graph& g, AdjMode adjacency);

// Post-hoc shift measurements for a trained model on a graph pair: the
// transport cost of the label-cost coupling (full batches) and the CMD
// value between full embedding sets.
struct PairMetrics {
  double w1_hat = 0.0;
  double cmd_value = 0.0;
};
PairMetrics pair_metrics(const GcnModel& model, const Graph& g_src, const Graph& g_tgt,
                         const TrainConfig& cfg);

// Uniform node subsample with the induced edge set, node ids remapped to
// 0..size-1 in ascending original order.
Graph sample_batch(const Graph& g, int size, RngState& rng);

}  // namespace gcl
