#include "gcl/gnn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gcl/io.hpp"

namespace gcl {

namespace {

double act_value(Activation a, double x) {
  switch (a) {
    case Activation::silu: return x / (1.0 + std::exp(-x));
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

double act_grad(Activation a, double x) {
  switch (a) {
    case Activation::silu: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

const char* act_name(Activation a) {
  switch (a) {
    case Activation::silu: return "silu";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation act_from_name(const std::string& s) {
  if (s == "silu") return Activation::silu;
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw std::runtime_error("unknown activation: " + s);
}

}  // namespace

Matrix AdjacencyOp::apply(const Matrix& x) const {
  check_shape(x.rows == n, "AdjacencyOp::apply");
  if (mode == AdjMode::identity) return x;
  Matrix out(n, x.cols);
  for (int i = 0; i < n; ++i) {
    double* oi = out.row(i);
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const double* xr = x.row(col_idx[e]);
      double w = weight[e];
      for (int j = 0; j < x.cols; ++j) oi[j] += w * xr[j];
    }
  }
  return out;
}

Matrix AdjacencyOp::apply_transpose(const Matrix& x) const {
  check_shape(x.rows == n, "AdjacencyOp::apply_transpose");
  if (mode == AdjMode::identity) return x;
  Matrix out(n, x.cols);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      double* orow = out.row(col_idx[e]);
      double w = weight[e];
      for (int j = 0; j < x.cols; ++j) orow[j] += w * xi[j];
    }
  }
  return out;
}

AdjacencyOp normalize_adjacency(const Graph& g, AdjMode mode) {
  AdjacencyOp op;
  op.n = g.n;
  op.mode = mode;
  op.degree.assign(g.n, 0.0);
  if (mode == AdjMode::identity) {
    op.row_ptr.assign(g.n + 1, 0);
    for (int i = 0; i < g.n; ++i) op.degree[i] = 1.0;
    return op;
  }

  std::vector<std::vector<int>> nbr(g.n);
  for (const auto& [i, j] : g.edges) {
    nbr[i].push_back(j);
    nbr[j].push_back(i);
  }

  op.row_ptr.assign(g.n + 1, 0);
  if (mode == AdjMode::sym_selfloop) {
    // Self-loop on every node; weights 1/sqrt((deg_i+1)(deg_j+1)).
    std::vector<double> dinv(g.n);
    for (int i = 0; i < g.n; ++i) {
      op.degree[i] = nbr[i].empty() ? 1.0 : static_cast<double>(nbr[i].size());
      dinv[i] = 1.0 / std::sqrt(static_cast<double>(nbr[i].size()) + 1.0);
    }
    for (int i = 0; i < g.n; ++i) {
      op.row_ptr[i + 1] = op.row_ptr[i] + 1 + static_cast<int>(nbr[i].size());
    }
    op.col_idx.resize(op.row_ptr[g.n]);
    op.weight.resize(op.row_ptr[g.n]);
    for (int i = 0; i < g.n; ++i) {
      int e = op.row_ptr[i];
      op.col_idx[e] = i;
      op.weight[e] = dinv[i] * dinv[i];
      ++e;
      for (int j : nbr[i]) {
        op.col_idx[e] = j;
        op.weight[e] = dinv[i] * dinv[j];
        ++e;
      }
    }
  } else {  // row_mean
    for (int i = 0; i < g.n; ++i) {
      op.degree[i] = nbr[i].empty() ? 1.0 : static_cast<double>(nbr[i].size());
      op.row_ptr[i + 1] =
          op.row_ptr[i] + (nbr[i].empty() ? 1 : static_cast<int>(nbr[i].size()));
    }
    op.col_idx.resize(op.row_ptr[g.n]);
    op.weight.resize(op.row_ptr[g.n]);
    for (int i = 0; i < g.n; ++i) {
      int e = op.row_ptr[i];
      if (nbr[i].empty()) {
        op.col_idx[e] = i;
        op.weight[e] = 1.0;
        continue;
      }
      double w = 1.0 / static_cast<double>(nbr[i].size());
      for (int j : nbr[i]) {
        op.col_idx[e] = j;
        op.weight[e] = w;
        ++e;
      }
    }
  }
  return op;
}

void GcnModel::check() const {
  if (acts.size() != layers.size()) throw std::invalid_argument("GcnModel: acts/layers mismatch");
  int cur = in_dim();
  for (const Matrix& w : layers) {
    if (w.rows != cur) throw std::invalid_argument("GcnModel: layer dims do not chain");
    if (!w.all_finite()) throw std::invalid_argument("GcnModel: non-finite layer weight");
    cur = w.cols;
  }
  if (head_w.rows != cur) throw std::invalid_argument("GcnModel: head dims do not chain");
  if (!head_w.all_finite()) throw std::invalid_argument("GcnModel: non-finite head weight");
  if (static_cast<int>(head_b.size()) != head_w.cols)
    throw std::invalid_argument("GcnModel: head bias size");
  for (double b : head_b)
    if (!std::isfinite(b)) throw std::invalid_argument("GcnModel: non-finite head bias");
}

namespace {

Matrix glorot(int rows, int cols, RngState& rng) {
  Matrix w(rows, cols);
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : w.data) v = (2.0 * rng.uniform01() - 1.0) * limit;
  return w;
}

}  // namespace

GcnModel make_model(int in_dim, const std::vector<int>& hidden, int n_classes,
                    Activation act, RngState& rng) {
  if (in_dim < 1 || n_classes < 2) throw std::invalid_argument("make_model: bad dims");
  GcnModel m;
  int cur = in_dim;
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("make_model: bad hidden dim");
    m.layers.push_back(glorot(cur, h, rng));
    m.acts.push_back(act);
    cur = h;
  }
  m.head_w = glorot(cur, n_classes, rng);
  m.head_b.assign(n_classes, 0.0);
  m.check();
  return m;
}

Matrix forward(const GcnModel& model, const AdjacencyOp& adj, const Matrix& x,
               TapeCache* cache) {
  check_shape(x.cols == model.in_dim(), "forward: input dim");
  check_shape(x.rows == adj.n, "forward: node count");
  if (cache) {
    cache->agg.clear();
    cache->pre.clear();
    cache->act.clear();
  }
  const Matrix* h = &x;
  Matrix cur;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    Matrix z = adj.apply(*h);
    Matrix p = matmul(z, model.layers[k]);
    Matrix a(p.rows, p.cols);
    for (std::size_t t = 0; t < p.data.size(); ++t)
      a.data[t] = act_value(model.acts[k], p.data[t]);
    if (cache) {
      cache->agg.push_back(std::move(z));
      cache->pre.push_back(std::move(p));
      cache->act.push_back(a);
    }
    cur = std::move(a);
    h = &cur;
  }
  Matrix logits = matmul(*h, model.head_w);
  for (int i = 0; i < logits.rows; ++i) {
    double* li = logits.row(i);
    for (int j = 0; j < logits.cols; ++j) li[j] += model.head_b[j];
  }
  return logits;
}

Gradients Gradients::zeros_like(const GcnModel& model) {
  Gradients g;
  for (const Matrix& w : model.layers) g.layers.emplace_back(w.rows, w.cols);
  g.head_w = Matrix(model.head_w.rows, model.head_w.cols);
  g.head_b.assign(model.head_b.size(), 0.0);
  return g;
}

void Gradients::accumulate(const Gradients& other, double scale) {
  for (std::size_t k = 0; k < layers.size(); ++k) add_inplace(layers[k], other.layers[k], scale);
  add_inplace(head_w, other.head_w, scale);
  for (std::size_t i = 0; i < head_b.size(); ++i) head_b[i] += scale * other.head_b[i];
}

bool Gradients::all_finite() const {
  for (const Matrix& m : layers)
    if (!m.all_finite()) return false;
  if (!head_w.all_finite()) return false;
  for (double v : head_b)
    if (!std::isfinite(v)) return false;
  return true;
}

void backward(const GcnModel& model, const AdjacencyOp& adj, const Matrix& x,
              const TapeCache& cache, const Matrix& d_logits, const Matrix* d_h_final,
              Gradients& out) {
  const int K = static_cast<int>(model.layers.size());
  const Matrix& head_in = K ? cache.act[K - 1] : x;
  check_shape(d_logits.rows == head_in.rows && d_logits.cols == model.out_dim(),
              "backward: d_logits");

  add_inplace(out.head_w, matmul_tn(head_in, d_logits));
  for (int j = 0; j < d_logits.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < d_logits.rows; ++i) s += d_logits(i, j);
    out.head_b[j] += s;
  }

  Matrix dh = matmul_nt(d_logits, model.head_w);
  if (d_h_final) add_inplace(dh, *d_h_final);

  for (int k = K - 1; k >= 0; --k) {
    // dP = dH .* act'(P)
    Matrix dp = std::move(dh);
    for (std::size_t t = 0; t < dp.data.size(); ++t)
      dp.data[t] *= act_grad(model.acts[k], cache.pre[k].data[t]);
    add_inplace(out.layers[k], matmul_tn(cache.agg[k], dp));
    if (k > 0) {
      Matrix dz = matmul_nt(dp, model.layers[k]);
      dh = adj.apply_transpose(dz);
    }
  }
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const double* li = logits.row(i);
    double* pi = p.row(i);
    double mx = li[0];
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, li[j]);
    double s = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      pi[j] = std::exp(li[j] - mx);
      s += pi[j];
    }
    for (int j = 0; j < logits.cols; ++j) pi[j] /= s;
  }
  return p;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     const std::vector<int>& idx, Matrix* d_logits) {
  if (static_cast<int>(labels.size()) != logits.rows)
    throw std::invalid_argument("cross_entropy: label count");
  if (idx.empty()) throw std::invalid_argument("cross_entropy: empty index set");
  if (d_logits) *d_logits = Matrix(logits.rows, logits.cols);
  const double inv = 1.0 / static_cast<double>(idx.size());
  double loss = 0.0;
  for (int i : idx) {
    const double* li = logits.row(i);
    int cls = (labels[i] + 1) / 2;
    if (cls < 0 || cls >= logits.cols) throw std::invalid_argument("cross_entropy: bad label");
    double mx = li[0];
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, li[j]);
    double s = 0.0;
    for (int j = 0; j < logits.cols; ++j) s += std::exp(li[j] - mx);
    loss += (std::log(s) + mx - li[cls]) * inv;
    if (d_logits) {
      double* di = d_logits->row(i);
      for (int j = 0; j < logits.cols; ++j) di[j] = std::exp(li[j] - mx) / s * inv;
      di[cls] -= inv;
    }
  }
  return loss;
}

AdamState AdamState::zeros_like(const GcnModel& model) {
  AdamState s;
  for (const Matrix& w : model.layers) {
    s.m_layers.emplace_back(w.rows, w.cols);
    s.v_layers.emplace_back(w.rows, w.cols);
  }
  s.m_head = Matrix(model.head_w.rows, model.head_w.cols);
  s.v_head = Matrix(model.head_w.rows, model.head_w.cols);
  s.m_bias.assign(model.head_b.size(), 0.0);
  s.v_bias.assign(model.head_b.size(), 0.0);
  return s;
}

namespace {

void adam_update(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, double lr, double b1, double b2, double eps,
                 double bc1, double bc2) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    double mh = m[i] / bc1;
    double vh = v[i] / bc2;
    w[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

}  // namespace

void adam_step(GcnModel& model, const Gradients& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (grads.layers.size() != model.layers.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  ++state.step_count;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
  for (std::size_t k = 0; k < model.layers.size(); ++k)
    adam_update(model.layers[k].data, grads.layers[k].data, state.m_layers[k].data,
                state.v_layers[k].data, lr, beta1, beta2, eps, bc1, bc2);
  adam_update(model.head_w.data, grads.head_w.data, state.m_head.data, state.v_head.data, lr,
              beta1, beta2, eps, bc1, bc2);
  adam_update(model.head_b, grads.head_b, state.m_bias, state.v_bias, lr, beta1, beta2, eps,
              bc1, bc2);
}

Matrix theory_gcn_1layer(const AdjacencyOp& adj, const Matrix& x) {
  if (adj.mode != AdjMode::row_mean)
    throw std::invalid_argument("theory_gcn_1layer: row_mean operator required");
  Matrix h = adj.apply(x);
  for (int i = 0; i < h.rows; ++i) {
    double s = std::sqrt(adj.degree[i]);
    double* hi = h.row(i);
    for (int j = 0; j < h.cols; ++j) hi[j] *= s;
  }
  return h;
}

void save_model(const GcnModel& model, const std::string& path) {
  model.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << "gcl-model 1\n";
  out << "layers " << model.layers.size() << "\n";
  auto dump = [&out](const Matrix& m) {
    for (int i = 0; i < m.rows; ++i) {
      const double* r = m.row(i);
      for (int j = 0; j < m.cols; ++j) out << (j ? " " : "") << format_double(r[j]);
      out << "\n";
    }
  };
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    out << "layer " << model.layers[k].rows << ' ' << model.layers[k].cols << ' '
        << act_name(model.acts[k]) << "\n";
    dump(model.layers[k]);
  }
  out << "head " << model.head_w.rows << ' ' << model.head_w.cols << "\n";
  dump(model.head_w);
  out << "bias " << model.head_b.size() << "\n";
  for (std::size_t j = 0; j < model.head_b.size(); ++j)
    out << (j ? " " : "") << format_double(model.head_b[j]);
  out << "\n";
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

namespace {

std::vector<std::string> tokens_of(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_model: missing " + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> toks;
  std::istringstream iss(line);
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

Matrix read_block(std::istream& in, int rows, int cols, const std::string& what) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    auto toks = tokens_of(in, what + " row");
    if (static_cast<int>(toks.size()) != cols)
      throw std::runtime_error("load_model: bad row width in " + what);
    for (int j = 0; j < cols; ++j) m(i, j) = parse_double(toks[j]);
  }
  return m;
}

}  // namespace

GcnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  auto hdr = tokens_of(in, "header");
  if (hdr.size() != 2 || hdr[0] != "gcl-model" || hdr[1] != "1")
    throw std::runtime_error("load_model: unrecognized header");
  auto nl = tokens_of(in, "layer count");
  if (nl.size() != 2 || nl[0] != "layers") throw std::runtime_error("load_model: expected layers");
  long long K = parse_int(nl[1]);
  GcnModel m;
  for (long long k = 0; k < K; ++k) {
    auto lh = tokens_of(in, "layer header");
    if (lh.size() != 4 || lh[0] != "layer") throw std::runtime_error("load_model: expected layer");
    int r = static_cast<int>(parse_int(lh[1]));
    int c = static_cast<int>(parse_int(lh[2]));
    m.layers.push_back(read_block(in, r, c, "layer"));
    m.acts.push_back(act_from_name(lh[3]));
  }
  auto hh = tokens_of(in, "head header");
  if (hh.size() != 3 || hh[0] != "head") throw std::runtime_error("load_model: expected head");
  m.head_w = read_block(in, static_cast<int>(parse_int(hh[1])),
                        static_cast<int>(parse_int(hh[2])), "head");
  auto bh = tokens_of(in, "bias header");
  if (bh.size() != 2 || bh[0] != "bias") throw std::runtime_error("load_model: expected bias");
  int L = static_cast<int>(parse_int(bh[1]));
  auto bt = tokens_of(in, "bias row");
  if (static_cast<int>(bt.size()) != L) throw std::runtime_error("load_model: bad bias width");
  m.head_b.resize(L);
  for (int j = 0; j < L; ++j) m.head_b[j] = parse_double(bt[j]);
  m.check();
  return m;
}

}  // namespace gcl
