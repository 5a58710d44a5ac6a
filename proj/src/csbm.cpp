#include "gcl/csbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gcl/io.hpp"
#include "gcl/stats.hpp"

namespace gcl {

void CsbmParams::validate() const {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("CsbmParams: n must be even and >= 2");
  if (d < 1) throw std::invalid_argument("CsbmParams: d must be positive");
  if (avg_degree < 1.0) throw std::invalid_argument("CsbmParams: avg_degree must be >= 1");
  if (!(ratio > 0.0)) throw std::invalid_argument("CsbmParams: ratio must be positive");
  if (!(signal > 0.0)) throw std::invalid_argument("CsbmParams: signal must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("CsbmParams: sigma must be positive");
  if (p() > 1.0 || q() > 1.0)
    throw std::invalid_argument("CsbmParams: derived edge probability exceeds 1");
}

bool Graph::operator==(const Graph& other) const {
  return n == other.n && d == other.d && labels == other.labels && edges == other.edges &&
         mu == other.mu && features.rows == other.features.rows &&
         features.cols == other.features.cols && features.data == other.features.data;
}

namespace {

// Geometric gap between successive Bernoulli(p) successes.
std::int64_t geometric_skip(RngState& rng, double log1mp) {
  double u = rng.uniform01_open_low();
  double g = std::log(u) / log1mp;
  if (g >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(g);
}

// Emit each unordered pair of `ids` with probability p.
void sample_block_pairs(const std::vector<int>& ids, double p, RngState& rng,
                        std::vector<std::pair<int, int>>& out) {
  const std::int64_t s = static_cast<std::int64_t>(ids.size());
  const std::int64_t total = s * (s - 1) / 2;
  if (total == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::int64_t i = 0; i < s; ++i)
      for (std::int64_t j = i + 1; j < s; ++j) out.emplace_back(ids[i], ids[j]);
    return;
  }
  const double log1mp = std::log1p(-p);
  std::int64_t k = -1;
  while (true) {
    std::int64_t g = geometric_skip(rng, log1mp);
    if (g > total) break;  // also covers the saturated sentinel
    k += 1 + g;
    if (k >= total) break;
    // Invert k -> (i, j): pairs are laid out row by row, row i holding
    // s-1-i entries. Float solve for i, then local correction.
    double sd = static_cast<double>(s);
    double disc = (sd - 0.5) * (sd - 0.5) - 2.0 * static_cast<double>(k);
    std::int64_t i = static_cast<std::int64_t>(sd - 0.5 - std::sqrt(std::max(disc, 0.0)));
    auto row_start = [s](std::int64_t r) { return r * (2 * s - r - 1) / 2; };
    while (i > 0 && row_start(i) > k) --i;
    while (row_start(i + 1) <= k) ++i;
    std::int64_t j = i + 1 + (k - row_start(i));
    out.emplace_back(ids[i], ids[j]);
  }
}

// Emit each cross pair (a in A, b in B) with probability p.
void sample_cross_pairs(const std::vector<int>& a, const std::vector<int>& b, double p,
                        RngState& rng, std::vector<std::pair<int, int>>& out) {
  const std::int64_t total = static_cast<std::int64_t>(a.size()) * b.size();
  if (total == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (int x : a)
      for (int y : b) out.emplace_back(std::min(x, y), std::max(x, y));
    return;
  }
  const double log1mp = std::log1p(-p);
  const std::int64_t nb = static_cast<std::int64_t>(b.size());
  std::int64_t k = -1;
  while (true) {
    std::int64_t g = geometric_skip(rng, log1mp);
    if (g > total) break;
    k += 1 + g;
    if (k >= total) break;
    int x = a[static_cast<std::size_t>(k / nb)];
    int y = b[static_cast<std::size_t>(k % nb)];
    out.emplace_back(std::min(x, y), std::max(x, y));
  }
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

}  // namespace

Graph generate_with_means(int n, int d, double p, double q, const std::vector<double>& mu_pos,
                          const std::vector<double>& mu_neg, double sigma,
                          const std::vector<double>& mu_record, bool bernoulli_labels,
                          RngState& rng) {
  if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
    throw std::invalid_argument("generate_with_means: edge probability out of [0,1]");
  Graph g;
  g.n = n;
  g.d = d;
  g.mu = mu_record;
  g.labels.resize(n);
  if (bernoulli_labels) {
    for (int i = 0; i < n; ++i) g.labels[i] = (rng.next_u64() & 1) ? 1 : -1;
  } else {
    for (int i = 0; i < n; ++i) g.labels[i] = (i < n / 2) ? 1 : -1;
  }

  std::vector<double> zero(d, 0.0);
  g.features = sample_gaussian_matrix(rng, n, d, zero, sigma);
  for (int i = 0; i < n; ++i) {
    const std::vector<double>& m = (g.labels[i] > 0) ? mu_pos : mu_neg;
    double* row = g.features.row(i);
    for (int j = 0; j < d; ++j) row[j] += m[j];
  }

  std::vector<int> pos_ids, neg_ids;
  for (int i = 0; i < n; ++i) (g.labels[i] > 0 ? pos_ids : neg_ids).push_back(i);
  sample_block_pairs(pos_ids, p, rng, g.edges);
  sample_block_pairs(neg_ids, p, rng, g.edges);
  sample_cross_pairs(pos_ids, neg_ids, q, rng, g.edges);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

Graph generate_csbm(const CsbmParams& params, RngState& rng) {
  params.validate();
  // Direction with per-coordinate std 1/sqrt(d), then rescaled so that
  // ||mu|| / sigma equals the requested signal strength.
  std::vector<double> zero(params.d, 0.0);
  Matrix raw = sample_gaussian_matrix(rng, 1, params.d, zero,
                                      1.0 / std::sqrt(static_cast<double>(params.d)));
  std::vector<double> mu(raw.data.begin(), raw.data.end());
  double nrm = norm2(mu);
  if (nrm == 0.0) throw std::runtime_error("generate_csbm: degenerate mu draw");
  double target_norm = params.signal * params.sigma;
  for (double& v : mu) v *= target_norm / nrm;

  std::vector<double> mu_neg = scaled(mu, -1.0);
  return generate_with_means(params.n, params.d, params.p(), params.q(), mu, mu_neg,
                             params.sigma, mu, params.bernoulli_labels, rng);
}

std::pair<std::vector<double>, std::vector<double>> shift_mean(const std::vector<double>& mu,
                                                               const ShiftSpec& spec,
                                                               RngState& rng) {
  double nrm = norm2(mu);
  if (nrm == 0.0) throw std::invalid_argument("shift_mean: mu must be nonzero");
  const std::size_t d = mu.size();

  std::vector<double> mu_pos = scaled(mu, 1.0 - spec.delta);
  std::vector<double> mu_neg = scaled(mu, -(1.0 + spec.delta));

  // Always draw the companion direction so the rng call sequence does not
  // depend on theta.
  std::vector<double> unit = scaled(mu, 1.0 / nrm);
  std::vector<double> ortho(d);
  double onorm = 0.0;
  for (int attempt = 0; attempt < 16 && onorm < 1e-9; ++attempt) {
    for (std::size_t j = 0; j < d; ++j) ortho[j] = rng.normal();
    double proj = dot(ortho, unit);
    for (std::size_t j = 0; j < d; ++j) ortho[j] -= proj * unit[j];
    onorm = norm2(ortho);
  }
  if (d > 1 && onorm < 1e-9) throw std::runtime_error("shift_mean: could not draw rotation plane");

  if (spec.theta_deg != 0.0) {
    if (d < 2) throw std::invalid_argument("shift_mean: rotation needs d >= 2");
    for (std::size_t j = 0; j < d; ++j) ortho[j] /= onorm;
    double theta = spec.theta_deg * 3.141592653589793238462643383279502884 / 180.0;
    double c = std::cos(theta), s = std::sin(theta);
    auto rotate = [&](std::vector<double>& w) {
      double a = dot(w, unit);
      double b = dot(w, ortho);
      double a2 = a * c - b * s;
      double b2 = a * s + b * c;
      for (std::size_t j = 0; j < d; ++j)
        w[j] += (a2 - a) * unit[j] + (b2 - b) * ortho[j];
    };
    rotate(mu_pos);
    rotate(mu_neg);
  }
  return {mu_pos, mu_neg};
}

std::pair<Graph, Graph> generate_shifted_pair(const CsbmParams& src, const ShiftSpec& spec,
                                              RngState& rng) {
  Graph source = generate_csbm(src, rng);
  auto [mu_pos, mu_neg] = shift_mean(source.mu, spec, rng);

  CsbmParams tgt = src;
  tgt.ratio = spec.ratio_target;
  tgt.avg_degree = spec.degree_target;
  tgt.validate();
  Graph target = generate_with_means(src.n, src.d, tgt.p(), tgt.q(), mu_pos, mu_neg, src.sigma,
                                     source.mu, src.bernoulli_labels, rng);
  return {std::move(source), std::move(target)};
}

double edge_homophily(const Graph& g) {
  if (g.edges.empty()) throw UndefinedMetricError("edge_homophily: graph has no edges");
  std::size_t same = 0;
  for (const auto& [i, j] : g.edges)
    if (g.labels[i] == g.labels[j]) ++same;
  return static_cast<double>(same) / static_cast<double>(g.edges.size());
}

void write_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_graph: cannot open " + path);
  out << g.n << ' ' << g.d << '\n';
  for (int i = 0; i < g.n; ++i) out << (i ? " " : "") << g.labels[i];
  out << '\n';
  for (int i = 0; i < g.n; ++i) {
    const double* row = g.features.row(i);
    for (int j = 0; j < g.d; ++j) {
      if (j) out << ' ';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  out << g.edges.size() << '\n';
  for (const auto& [i, j] : g.edges) out << i << ' ' << j << '\n';
  out << "mu";
  for (int j = 0; j < g.d; ++j) out << ' ' << format_double(g.mu[j]);
  out << '\n';
  if (!out) throw std::runtime_error("write_graph: write failed for " + path);
}

namespace {

struct LineReader {
  std::ifstream in;
  int lineno = 0;
  explicit LineReader(const std::string& path) : in(path, std::ios::binary) {}

  std::string next(const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) {
      throw std::runtime_error("parse error at line " + std::to_string(lineno + 1) +
                               ": expected " + what);
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("parse error at line " + std::to_string(lineno) + ": " + msg);
  }
};

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> toks;
  std::istringstream iss(s);
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

}  // namespace

Graph read_graph(const std::string& path) {
  LineReader r(path);
  if (!r.in) throw std::runtime_error("read_graph: cannot open " + path);

  Graph g;
  {
    auto toks = split_ws(r.next("header 'n d'"));
    if (toks.size() != 2) r.fail("expected 'n d'");
    try {
      g.n = static_cast<int>(parse_int(toks[0]));
      g.d = static_cast<int>(parse_int(toks[1]));
    } catch (const std::exception& e) {
      r.fail(e.what());
    }
    if (g.n < 0 || g.d < 0) r.fail("negative dimensions");
  }
  {
    auto toks = split_ws(r.next("label line"));
    if (static_cast<int>(toks.size()) != g.n) r.fail("expected " + std::to_string(g.n) + " labels");
    g.labels.resize(g.n);
    for (int i = 0; i < g.n; ++i) {
      long long v = 0;
      try {
        v = parse_int(toks[i]);
      } catch (const std::exception& e) {
        r.fail(e.what());
      }
      if (v != 1 && v != -1) r.fail("label must be -1 or 1");
      g.labels[i] = static_cast<int>(v);
    }
  }
  g.features = Matrix(g.n, g.d);
  for (int i = 0; i < g.n; ++i) {
    auto toks = split_ws(r.next("feature row " + std::to_string(i)));
    if (static_cast<int>(toks.size()) != g.d) r.fail("expected " + std::to_string(g.d) + " values");
    for (int j = 0; j < g.d; ++j) {
      try {
        g.features(i, j) = parse_double(toks[j]);
      } catch (const std::exception& e) {
        r.fail(e.what());
      }
    }
  }
  long long edge_count = 0;
  {
    auto toks = split_ws(r.next("edge count"));
    if (toks.size() != 1) r.fail("expected a single edge count");
    try {
      edge_count = parse_int(toks[0]);
    } catch (const std::exception& e) {
      r.fail(e.what());
    }
    if (edge_count < 0) r.fail("negative edge count");
  }
  g.edges.reserve(static_cast<std::size_t>(edge_count));
  for (long long e = 0; e < edge_count; ++e) {
    auto toks = split_ws(r.next("edge " + std::to_string(e)));
    if (toks.size() != 2) r.fail("expected 'i j'");
    long long i = 0, j = 0;
    try {
      i = parse_int(toks[0]);
      j = parse_int(toks[1]);
    } catch (const std::exception& e2) {
      r.fail(e2.what());
    }
    if (i < 0 || j <= i || j >= g.n) r.fail("edge endpoints must satisfy 0 <= i < j < n");
    g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  {
    auto toks = split_ws(r.next("mu line"));
    if (toks.empty() || toks[0] != "mu") r.fail("expected 'mu ...'");
    if (static_cast<int>(toks.size()) != g.d + 1) r.fail("expected " + std::to_string(g.d) + " mu values");
    g.mu.resize(g.d);
    for (int j = 0; j < g.d; ++j) {
      try {
        g.mu[j] = parse_double(toks[j + 1]);
      } catch (const std::exception& e) {
        r.fail(e.what());
      }
    }
  }
  return g;
}

}  // namespace gcl
