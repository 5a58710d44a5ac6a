#pragma once

#include "gcl/matrix.hpp"

namespace gcl {

// Coupling between two equal-size batches with uniform marginals: every row
// and column of gamma sums to 1/n, total mass 1. total_cost = sum gamma*cost,
// a per-sample average.
struct TransportPlan {
  Matrix gamma;
  double total_cost = 0.0;
};

// c_ij = -sum_c y_src[i,c] * log(max(p_tgt[j,c], eps)), eps = 1e-7.
// y_src rows are one-hot; p_tgt rows sum to 1 (checked to 1e-6).
Matrix cost_label(const Matrix& y_src, const Matrix& p_tgt);

// c_ij = alpha * ||h_src[i] - h_tgt[j]||^2 + beta * cost_label(i, j).
Matrix cost_joint(const Matrix& h_src, const Matrix& y_src, const Matrix& h_tgt,
                  const Matrix& p_tgt, double alpha, double beta);

// Exact minimizer over uniform equal-size marginals. Such problems always
// admit a permutation optimum; the returned plan is that vertex (entries
// 1/n), with ties between equally cheap permutations broken toward the
// lexicographically smallest assignment.
TransportPlan solve_emd(const Matrix& cost);

// Exhaustive permutation minimum, n <= 8. Test oracle for solve_emd.
TransportPlan brute_force_emd(const Matrix& cost);

// sum_ij gamma_ij * c_ij.
double w1_estimate(const TransportPlan& plan, const Matrix& cost);

// Entropic approximation (log-domain Sinkhorn), optional fallback for large
// batches; never used by the exact pipeline by default.
TransportPlan sinkhorn_emd(const Matrix& cost, double epsilon = 0.05, int max_iters = 2000);

}  // namespace gcl
