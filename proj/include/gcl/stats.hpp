#pragma once

#include <stdexcept>
#include <vector>

#include "gcl/matrix.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// Thrown when a metric has no defined value on the given input
// (single-class AUC, zero-variance Pearson, empty edge set, ...).
struct UndefinedMetricError : std::runtime_error {
  explicit UndefinedMetricError(const std::string& what) : std::runtime_error(what) {}
};

// Standard normal CDF. Absolute error below 1e-15 through erfc.
double std_normal_cdf(double x);

// Inverse of std_normal_cdf, |p| in (0,1). Accurate to ~1e-12 via
// rational initial guess plus Newton polish.
double std_normal_quantile(double p);

// Mann-Whitney AUC of scores against {-1,+1} labels; ties count 1/2.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Pearson correlation coefficient.
double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

// i.i.d. rows with per-coordinate mean `mean[j]` and common std `std`.
Matrix sample_gaussian_matrix(RngState& rng, int rows, int cols,
                              const std::vector<double>& mean, double std);

double vec_mean(const std::vector<double>& xs);
double vec_std(const std::vector<double>& xs);  // unbiased (n-1)

}  // namespace gcl
