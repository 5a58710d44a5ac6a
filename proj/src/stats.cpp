#include "gcl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gcl {

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("std_normal_cdf: non-finite input");
  // 1/sqrt(2) to full double precision; erfc handles the tails without
  // the cancellation 0.5*(1+erf) would suffer for x << 0.
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("std_normal_quantile: p must be in (0,1)");
  // Acklam's rational approximation, then two Newton steps on Phi.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    double e = std_normal_cdf(x) - p;
    double pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
    if (pdf > 0.0) x -= e / pdf;
  }
  return x;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("roc_auc: size mismatch or empty input");
  std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

  double n_pos = 0.0, n_neg = 0.0, rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Average rank (1-based) across the tie group gives the 1/2 credit.
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0) {
        n_pos += 1.0;
        rank_sum_pos += avg_rank;
      } else {
        n_neg += 1.0;
      }
    }
    i = j;
  }
  if (n_pos == 0.0 || n_neg == 0.0)
    throw UndefinedMetricError("roc_auc: both classes must be present");
  double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("pearson_r: need matched vectors of length >= 2");
  std::size_t n = xs.size();
  double mx = vec_mean(xs), my = vec_mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedMetricError("pearson_r: zero variance input");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

Matrix sample_gaussian_matrix(RngState& rng, int rows, int cols,
                              const std::vector<double>& mean, double std) {
  if (std < 0.0) throw std::invalid_argument("sample_gaussian_matrix: negative std");
  if (static_cast<int>(mean.size()) != cols)
    throw std::invalid_argument("sample_gaussian_matrix: mean length != cols");
  Matrix m(rows, cols);
  if (std == 0.0) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = mean[j];
    return m;
  }
  std::size_t total = m.data.size();
  std::size_t k = 0;
  while (k + 1 < total) {
    double z0, z1;
    rng.normal_pair(z0, z1);
    m.data[k] = z0;
    m.data[k + 1] = z1;
    k += 2;
  }
  if (k < total) m.data[k] = rng.normal();
  for (int i = 0; i < rows; ++i) {
    double* r = m.row(i);
    for (int j = 0; j < cols; ++j) r[j] = mean[j] + std * r[j];
  }
  return m;
}

double vec_mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("vec_mean: empty");
  double s = 0.0;
  for (double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}

double vec_std(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("vec_std: need length >= 2");
  double m = vec_mean(xs);
  double s = 0.0;
  for (double v : xs) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace gcl
