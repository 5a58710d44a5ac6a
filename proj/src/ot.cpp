#include "gcl/ot.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gcl {

namespace {

constexpr double kLogClamp = 1e-7;

void check_cost(const Matrix& cost) {
  if (cost.rows != cost.cols) throw std::invalid_argument("cost matrix must be square");
  if (cost.rows == 0) throw std::invalid_argument("cost matrix must be nonempty");
  for (double v : cost.data)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("cost entries must be finite and nonnegative");
}

double plan_cost(const std::vector<int>& row_to_col, const Matrix& cost) {
  double s = 0.0;
  for (int i = 0; i < cost.rows; ++i) s += cost(i, row_to_col[i]);
  return s / static_cast<double>(cost.rows);
}

TransportPlan plan_from_permutation(const std::vector<int>& row_to_col, const Matrix& cost) {
  const int n = cost.rows;
  TransportPlan plan;
  plan.gamma = Matrix(n, n);
  const double w = 1.0 / static_cast<double>(n);
  for (int i = 0; i < n; ++i) plan.gamma(i, row_to_col[i]) = w;
  plan.total_cost = plan_cost(row_to_col, cost);
  return plan;
}

// Shortest-augmenting-path assignment with dual potentials, O(n^3).
// Returns the matched column per row plus the final potentials (1-indexed
// internally, converted on return).
struct AssignmentResult {
  std::vector<int> row_to_col;
  std::vector<double> u, v;  // size n, c(i,j) - u[i] - v[j] >= 0 up to roundoff
};

AssignmentResult solve_assignment(const Matrix& c) {
  const int n = c.rows;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  AssignmentResult res;
  res.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) res.row_to_col[p[j] - 1] = j - 1;
  res.u.assign(u.begin() + 1, u.end());
  res.v.assign(v.begin() + 1, v.end());
  return res;
}

// Kuhn's matching on an adjacency-list bipartite graph; returns true when a
// perfect matching of `rows` into free columns exists.
bool kuhn_try(int row, const std::vector<std::vector<int>>& adj, std::vector<int>& col_match,
              std::vector<char>& seen) {
  for (int col : adj[row]) {
    if (seen[col]) continue;
    seen[col] = 1;
    if (col_match[col] < 0 || kuhn_try(col_match[col], adj, col_match, seen)) {
      col_match[col] = row;
      return true;
    }
  }
  return false;
}

bool has_perfect_matching(const std::vector<std::vector<int>>& adj, int n_cols,
                          const std::vector<int>& rows) {
  std::vector<int> col_match(n_cols, -1);
  for (int row : rows) {
    std::vector<char> seen(n_cols, 0);
    if (!kuhn_try(row, adj, col_match, seen)) return false;
  }
  return true;
}

// Among the optimal permutations (perfect matchings in the tight-edge
// subgraph implied by the duals), pick the lexicographically smallest.
std::vector<int> canonicalize(const Matrix& cost, const AssignmentResult& res) {
  const int n = cost.rows;
  double scale = 1.0;
  for (double vv : cost.data) scale = std::max(scale, std::fabs(vv));
  const double tol = 1e-9 * scale;

  std::vector<std::vector<int>> tight(n);
  std::size_t n_edges = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (cost(i, j) - res.u[i] - res.v[j] <= tol) {
        tight[i].push_back(j);
        ++n_edges;
      }
    }
  }
  if (n_edges == static_cast<std::size_t>(n)) return res.row_to_col;  // unique optimum

  std::vector<int> chosen(n, -1);
  std::vector<char> col_taken(n, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<int> rest;
    for (int k = i + 1; k < n; ++k) rest.push_back(k);
    bool placed = false;
    for (int j : tight[i]) {
      if (col_taken[j]) continue;
      col_taken[j] = 1;
      // Mask the taken columns out of the remaining rows' adjacency.
      std::vector<std::vector<int>> adj(n);
      for (int k : rest)
        for (int cc : tight[k])
          if (!col_taken[cc]) adj[k].push_back(cc);
      if (has_perfect_matching(adj, n, rest)) {
        chosen[i] = j;
        placed = true;
        break;
      }
      col_taken[j] = 0;
    }
    if (!placed) return res.row_to_col;  // numeric tolerance mishap; keep solver output
  }
  return chosen;
}

}  // namespace

Matrix cost_label(const Matrix& y_src, const Matrix& p_tgt) {
  if (y_src.cols != p_tgt.cols)
    throw std::invalid_argument("cost_label: class counts differ");
  if (y_src.rows != p_tgt.rows)
    throw std::invalid_argument("cost_label: batch sizes differ");
  const int n = y_src.rows, L = y_src.cols;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int c = 0; c < L; ++c) s += p_tgt(j, c);
    if (std::fabs(s - 1.0) > 1e-6)
      throw std::invalid_argument("cost_label: p_tgt rows must sum to 1");
  }
  // Precompute clamped logs once; each cost entry is then a dot product
  // against a one-hot row.
  Matrix logp(n, L);
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < L; ++c) logp(j, c) = std::log(std::max(p_tgt(j, c), kLogClamp));
  Matrix cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int c = 0; c < L; ++c) acc -= y_src(i, c) * logp(j, c);
      cost(i, j) = acc;
    }
  }
  return cost;
}

Matrix cost_joint(const Matrix& h_src, const Matrix& y_src, const Matrix& h_tgt,
                  const Matrix& p_tgt, double alpha, double beta) {
  if (h_src.cols != h_tgt.cols) throw std::invalid_argument("cost_joint: embedding dims differ");
  if (h_src.rows != h_tgt.rows) throw std::invalid_argument("cost_joint: batch sizes differ");
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("cost_joint: negative weight");
  if (alpha == 0.0 && beta == 0.0)
    std::cerr << "cost_joint: alpha and beta both zero, cost matrix is identically zero\n";

  const int n = h_src.rows, dh = h_src.cols;
  Matrix cost(n, n);
  if (alpha > 0.0) {
    for (int i = 0; i < n; ++i) {
      const double* a = h_src.row(i);
      for (int j = 0; j < n; ++j) {
        const double* b = h_tgt.row(j);
        double acc = 0.0;
        for (int k = 0; k < dh; ++k) {
          double dlt = a[k] - b[k];
          acc += dlt * dlt;
        }
        cost(i, j) = alpha * acc;
      }
    }
  }
  if (beta > 0.0) {
    Matrix lab = cost_label(y_src, p_tgt);
    for (std::size_t k = 0; k < cost.data.size(); ++k) cost.data[k] += beta * lab.data[k];
  }
  return cost;
}

TransportPlan solve_emd(const Matrix& cost) {
  check_cost(cost);
  AssignmentResult res = solve_assignment(cost);
  std::vector<int> perm = canonicalize(cost, res);
  return plan_from_permutation(perm, cost);
}

TransportPlan brute_force_emd(const Matrix& cost) {
  check_cost(cost);
  const int n = cost.rows;
  if (n > 8) throw std::invalid_argument("brute_force_emd: n > 8");
  std::vector<int> perm(n), best(n);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = plan_cost(perm, cost);
  double scale = 1.0;
  for (double v : cost.data) scale = std::max(scale, std::fabs(v));
  const double tol = 1e-12 * scale;
  while (std::next_permutation(perm.begin(), perm.end())) {
    double c = plan_cost(perm, cost);
    if (c < best_cost - tol) {  // ties keep the earlier = lexicographically smaller
      best_cost = c;
      best = perm;
    }
  }
  return plan_from_permutation(best, cost);
}

double w1_estimate(const TransportPlan& plan, const Matrix& cost) {
  if (plan.gamma.rows != cost.rows || plan.gamma.cols != cost.cols)
    throw std::invalid_argument("w1_estimate: shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < cost.data.size(); ++k) s += plan.gamma.data[k] * cost.data[k];
  return s;
}

TransportPlan sinkhorn_emd(const Matrix& cost, double epsilon, int max_iters) {
  check_cost(cost);
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn_emd: epsilon must be positive");
  const int n = cost.rows;
  const double log_marg = -std::log(static_cast<double>(n));  // log(1/n)

  // Log-domain iterates: f, g with gamma_ij = exp((f_i + g_j - c_ij)/eps)/n kept
  // implicitly; row/col log-sum-exp updates.
  std::vector<double> f(n, 0.0), g(n, 0.0);
  auto lse_row = [&](int i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) mx = std::max(mx, (g[j] - cost(i, j)) / epsilon);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::exp((g[j] - cost(i, j)) / epsilon - mx);
    return mx + std::log(s);
  };
  auto lse_col = [&](int j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) mx = std::max(mx, (f[i] - cost(i, j)) / epsilon);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp((f[i] - cost(i, j)) / epsilon - mx);
    return mx + std::log(s);
  };
  const double marg = 1.0 / n;
  for (int it = 0; it < max_iters; ++it) {
    for (int i = 0; i < n; ++i) f[i] = epsilon * (log_marg - lse_row(i));
    for (int j = 0; j < n; ++j) g[j] = epsilon * (log_marg - lse_col(j));
    if (it % 10 == 9 || it == max_iters - 1) {
      // Columns are exact right after the g-update; stop once rows match too.
      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        worst = std::max(worst, std::fabs(std::exp(lse_row(i) + f[i] / epsilon) - marg));
      if (worst < 1e-13) break;
    }
  }
  TransportPlan plan;
  plan.gamma = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      plan.gamma(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / epsilon);

  // Round to exact uniform marginals: scale rows down to <= 1/n, then
  // columns, then spread the remaining deficit as a rank-1 patch. Keeps
  // nonnegativity and satisfies the marginal contract exactly.
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += plan.gamma(i, j);
    if (row > marg) {
      double s = marg / row;
      for (int j = 0; j < n; ++j) plan.gamma(i, j) *= s;
    }
  }
  std::vector<double> col(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) col[j] += plan.gamma(i, j);
  for (int j = 0; j < n; ++j) {
    if (col[j] > marg) {
      double s = marg / col[j];
      for (int i = 0; i < n; ++i) plan.gamma(i, j) *= s;
    }
  }
  std::vector<double> row_def(n, marg), col_def(n, marg);
  double deficit = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      row_def[i] -= plan.gamma(i, j);
      col_def[j] -= plan.gamma(i, j);
    }
  for (int i = 0; i < n; ++i) {
    row_def[i] = std::max(row_def[i], 0.0);
    col_def[i] = std::max(col_def[i], 0.0);
    deficit += row_def[i];
  }
  if (deficit > 0.0) {
    double col_total = 0.0;
    for (int j = 0; j < n; ++j) col_total += col_def[j];
    if (col_total > 0.0)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          plan.gamma(i, j) += row_def[i] * col_def[j] / col_total;
  }
  plan.total_cost = w1_estimate(plan, cost);
  return plan;
}

}  // namespace gcl
