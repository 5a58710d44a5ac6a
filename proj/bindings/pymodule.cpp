// Python bindings for the core library: closed-form shift calculators and
// their sampling oracles, the CSBM generator, the exact transport solver,
// and the training loop with its evaluation metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "gcl/csbm.hpp"
#include "gcl/gnn.hpp"
#include "gcl/matrix.hpp"
#include "gcl/ot.hpp"
#include "gcl/rng.hpp"
#include "gcl/stats.hpp"
#include "gcl/theory.hpp"
#include "gcl/trainer.hpp"

namespace py = pybind11;

namespace {

gcl::Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d float array");
  gcl::Matrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  const double* src = a.data();
  std::copy(src, src + m.data.size(), m.data.begin());
  return m;
}

py::array_t<double> to_numpy(const gcl::Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() =
      "CSBM shift calculators, sampling oracles, an exact transport solver, "
      "and graph domain-adaptation training";

  // ------------------------------------------------------------- numerics
  mod.def("std_normal_cdf", &gcl::std_normal_cdf, py::arg("x"));
  mod.def("std_normal_quantile", &gcl::std_normal_quantile, py::arg("p"));
  mod.def("roc_auc", &gcl::roc_auc, py::arg("scores"), py::arg("labels"),
          "Mann-Whitney AUC of scores against {-1,+1} labels; ties count 1/2.");
  mod.def("pearson_r", &gcl::pearson_r, py::arg("xs"), py::arg("ys"));

  // ----------------------------------------------------------------- csbm
  py::class_<gcl::CsbmParams>(mod, "CsbmParams")
      .def(py::init<>())
      .def_readwrite("n", &gcl::CsbmParams::n)
      .def_readwrite("d", &gcl::CsbmParams::d)
      .def_readwrite("avg_degree", &gcl::CsbmParams::avg_degree)
      .def_readwrite("ratio", &gcl::CsbmParams::ratio)
      .def_readwrite("signal", &gcl::CsbmParams::signal)
      .def_readwrite("sigma", &gcl::CsbmParams::sigma)
      .def_readwrite("bernoulli_labels", &gcl::CsbmParams::bernoulli_labels)
      .def("p", &gcl::CsbmParams::p)
      .def("q", &gcl::CsbmParams::q);

  py::class_<gcl::ShiftSpec>(mod, "ShiftSpec")
      .def(py::init<>())
      .def_readwrite("delta", &gcl::ShiftSpec::delta)
      .def_readwrite("theta_deg", &gcl::ShiftSpec::theta_deg)
      .def_readwrite("ratio_target", &gcl::ShiftSpec::ratio_target)
      .def_readwrite("degree_target", &gcl::ShiftSpec::degree_target)
      .def_static("identity", &gcl::ShiftSpec::identity, py::arg("src"));

  py::class_<gcl::Graph>(mod, "Graph")
      .def_readonly("n", &gcl::Graph::n)
      .def_readonly("d", &gcl::Graph::d)
      .def_readonly("labels", &gcl::Graph::labels)
      .def_readonly("edges", &gcl::Graph::edges)
      .def_readonly("mu", &gcl::Graph::mu)
      .def_property_readonly("features",
                             [](const gcl::Graph& g) { return to_numpy(g.features); })
      .def("homophily", &gcl::edge_homophily)
      .def("__eq__", [](const gcl::Graph& a, const gcl::Graph& b) { return a == b; });

  mod.def(
      "generate_csbm",
      [](const gcl::CsbmParams& params, std::uint64_t seed) {
        gcl::RngState rng(seed);
        return gcl::generate_csbm(params, rng);
      },
      py::arg("params"), py::arg("seed"));
  mod.def(
      "generate_shifted_pair",
      [](const gcl::CsbmParams& src, const gcl::ShiftSpec& spec, std::uint64_t seed) {
        gcl::RngState rng(seed);
        return gcl::generate_shifted_pair(src, spec, rng);
      },
      py::arg("src"), py::arg("spec"), py::arg("seed"),
      "Source graph plus a target graph with shifted means and structure.");
  mod.def("write_graph", &gcl::write_graph, py::arg("graph"), py::arg("path"));
  mod.def("read_graph", &gcl::read_graph, py::arg("path"));

  // --------------------------------------------------------- closed forms
  py::class_<gcl::ShiftInputs>(mod, "ShiftInputs")
      .def(py::init<>())
      .def_readwrite("m", &gcl::ShiftInputs::m)
      .def_readwrite("delta", &gcl::ShiftInputs::delta)
      .def_readwrite("r_src", &gcl::ShiftInputs::r_src)
      .def_readwrite("r_tgt", &gcl::ShiftInputs::r_tgt)
      .def_readwrite("D_src", &gcl::ShiftInputs::D_src)
      .def_readwrite("D_tgt", &gcl::ShiftInputs::D_tgt);

  py::class_<gcl::ClosedFormReport>(mod, "ClosedFormReport")
      .def_readonly("s1", &gcl::ClosedFormReport::s1)
      .def_readonly("s_neg1", &gcl::ClosedFormReport::s_neg1)
      .def_readonly("delta_yx", &gcl::ClosedFormReport::delta_yx)
      .def_readonly("delta_yh", &gcl::ClosedFormReport::delta_yh)
      .def_readonly("eps_t_f", &gcl::ClosedFormReport::eps_t_f)
      .def_readonly("eps_t_fg", &gcl::ClosedFormReport::eps_t_fg)
      .def_readonly("eps_s_f", &gcl::ClosedFormReport::eps_s_f)
      .def_readonly("eps_s_fg", &gcl::ClosedFormReport::eps_s_fg)
      .def_readonly("clamped", &gcl::ClosedFormReport::clamped);

  mod.def("closed_form_report", &gcl::closed_form_report, py::arg("inputs"));
  mod.def("conditional_shift_x", &gcl::conditional_shift_x, py::arg("m"), py::arg("delta"));
  mod.def("conditional_shift_h", &gcl::conditional_shift_h, py::arg("inputs"));
  mod.def("expected_error_f", &gcl::expected_error_f, py::arg("m"), py::arg("delta"));
  mod.def("expected_error_fg", &gcl::expected_error_fg, py::arg("inputs"));
  mod.def("source_error_f", &gcl::source_error_f, py::arg("m"));
  mod.def("source_error_fg", &gcl::source_error_fg, py::arg("inputs"));
  mod.def("latent_centroids", &gcl::latent_centroids, py::arg("inputs"),
          "Signed projections (s_{+1}, s_{-1}) of the aggregated class means.");

  // ------------------------------------------------------ sampling oracles
  py::class_<gcl::McEstimate>(mod, "McEstimate")
      .def_readonly("estimate", &gcl::McEstimate::estimate)
      .def_readonly("std_error", &gcl::McEstimate::std_error)
      .def_readonly("count", &gcl::McEstimate::count)
      .def_readonly("total", &gcl::McEstimate::total);

  py::class_<gcl::GraphMcReport>(mod, "GraphMcReport")
      .def_readonly("delta_yh", &gcl::GraphMcReport::delta_yh)
      .def_readonly("eps_t_fg", &gcl::GraphMcReport::eps_t_fg)
      .def_readonly("eps_s_fg", &gcl::GraphMcReport::eps_s_fg);

  mod.def(
      "mc_conditional_shift_feature",
      [](double m, double delta, std::int64_t n_samples, std::uint64_t seed) {
        gcl::RngState rng(seed);
        py::gil_scoped_release release;
        return gcl::mc_conditional_shift_feature(m, delta, n_samples, rng);
      },
      py::arg("m"), py::arg("delta"), py::arg("n_samples"), py::arg("seed"));
  mod.def(
      "mc_expected_error_feature",
      [](double m, double delta, std::int64_t n_samples, std::uint64_t seed) {
        gcl::RngState rng(seed);
        py::gil_scoped_release release;
        return gcl::mc_expected_error_feature(m, delta, n_samples, rng);
      },
      py::arg("m"), py::arg("delta"), py::arg("n_samples"), py::arg("seed"));
  mod.def(
      "mc_graph_report",
      [](const gcl::ShiftInputs& inp, int n_graphs, int n_nodes, std::uint64_t seed) {
        gcl::RngState rng(seed);
        py::gil_scoped_release release;
        return gcl::mc_graph_report(inp, n_graphs, n_nodes, rng);
      },
      py::arg("inputs"), py::arg("n_graphs"), py::arg("n_nodes"), py::arg("seed"));

  // ------------------------------------------------------------ transport
  py::class_<gcl::TransportPlan>(mod, "TransportPlan")
      .def_property_readonly("gamma",
                             [](const gcl::TransportPlan& p) { return to_numpy(p.gamma); })
      .def_readonly("total_cost", &gcl::TransportPlan::total_cost);

  mod.def(
      "solve_emd",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& cost) {
        gcl::Matrix c = to_matrix(cost);
        py::gil_scoped_release release;
        return gcl::solve_emd(c);
      },
      py::arg("cost"),
      "Exact minimum-cost coupling with uniform equal marginals (square cost).");
  mod.def(
      "sinkhorn_emd",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& cost,
         double epsilon, int max_iters) {
        gcl::Matrix c = to_matrix(cost);
        py::gil_scoped_release release;
        return gcl::sinkhorn_emd(c, epsilon, max_iters);
      },
      py::arg("cost"), py::arg("epsilon") = 0.05, py::arg("max_iters") = 2000);
  mod.def(
      "cmd_discrepancy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
         int k_moments) { return gcl::cmd_discrepancy(to_matrix(a), to_matrix(b), k_moments).value; },
      py::arg("a"), py::arg("b"), py::arg("k_moments") = 5,
      "Central-moment discrepancy between two row sets (value only).");

  // -------------------------------------------------------------- training
  py::enum_<gcl::Method>(mod, "Method")
      .value("erm", gcl::Method::erm)
      .value("cmd", gcl::Method::cmd)
      .value("gconda", gcl::Method::gconda)
      .value("gconda_pp", gcl::Method::gconda_pp)
      .value("gconda_dirl", gcl::Method::gconda_dirl);

  py::enum_<gcl::Activation>(mod, "Activation")
      .value("silu", gcl::Activation::silu)
      .value("relu", gcl::Activation::relu)
      .value("identity", gcl::Activation::identity);

  py::enum_<gcl::AdjMode>(mod, "AdjMode")
      .value("sym_selfloop", gcl::AdjMode::sym_selfloop)
      .value("row_mean", gcl::AdjMode::row_mean)
      .value("identity", gcl::AdjMode::identity);

  py::class_<gcl::TrainConfig>(mod, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("method", &gcl::TrainConfig::method)
      .def_readwrite("lambda_", &gcl::TrainConfig::lambda)
      .def_readwrite("alpha", &gcl::TrainConfig::alpha)
      .def_readwrite("beta", &gcl::TrainConfig::beta)
      .def_readwrite("k_moments", &gcl::TrainConfig::k_moments)
      .def_readwrite("epochs", &gcl::TrainConfig::epochs)
      .def_readwrite("lr", &gcl::TrainConfig::lr)
      .def_readwrite("seed", &gcl::TrainConfig::seed)
      .def_readwrite("val_fraction", &gcl::TrainConfig::val_fraction)
      .def_readwrite("hidden", &gcl::TrainConfig::hidden)
      .def_readwrite("activation", &gcl::TrainConfig::activation)
      .def_readwrite("adjacency", &gcl::TrainConfig::adjacency)
      .def("serialize", &gcl::TrainConfig::serialize)
      .def("config_hash", &gcl::TrainConfig::config_hash);

  py::class_<gcl::GcnModel>(mod, "GcnModel")
      .def_property_readonly("in_dim", &gcl::GcnModel::in_dim)
      .def_property_readonly("out_dim", &gcl::GcnModel::out_dim)
      .def_property_readonly("n_layers",
                             [](const gcl::GcnModel& m) { return m.layers.size(); });

  py::class_<gcl::EpochStats>(mod, "EpochStats")
      .def_readonly("source_ce", &gcl::EpochStats::source_ce)
      .def_readonly("discrepancy", &gcl::EpochStats::discrepancy)
      .def_readonly("val_auc", &gcl::EpochStats::val_auc);

  py::class_<gcl::TrainReport>(mod, "TrainReport")
      .def_readonly("model", &gcl::TrainReport::model)
      .def_readonly("chosen_epoch", &gcl::TrainReport::chosen_epoch)
      .def_readonly("history", &gcl::TrainReport::history)
      .def_readonly("ok", &gcl::TrainReport::ok)
      .def_readonly("note", &gcl::TrainReport::note);

  py::class_<gcl::EvalMetrics>(mod, "EvalMetrics")
      .def_readonly("auc", &gcl::EvalMetrics::auc)
      .def_readonly("logloss", &gcl::EvalMetrics::logloss)
      .def_readonly("accuracy", &gcl::EvalMetrics::accuracy);

  py::class_<gcl::PairMetrics>(mod, "PairMetrics")
      .def_readonly("w1_hat", &gcl::PairMetrics::w1_hat)
      .def_readonly("cmd_value", &gcl::PairMetrics::cmd_value);

  mod.def(
      "make_model",
      [](int in_dim, const std::vector<int>& hidden, int n_classes, gcl::Activation act,
         std::uint64_t seed) {
        gcl::RngState rng(seed);
        return gcl::make_model(in_dim, hidden, n_classes, act, rng);
      },
      py::arg("in_dim"), py::arg("hidden"), py::arg("n_classes") = 2,
      py::arg("activation") = gcl::Activation::silu, py::arg("seed") = 0);
  mod.def(
      "train",
      [](const gcl::TrainConfig& cfg, const gcl::Graph& g_src, const gcl::Graph& g_tgt) {
        py::gil_scoped_release release;
        return gcl::train(cfg, g_src, g_tgt);
      },
      py::arg("config"), py::arg("source"), py::arg("target"));
  mod.def("evaluate", &gcl::evaluate, py::arg("model"), py::arg("graph"),
          py::arg("adjacency") = gcl::AdjMode::sym_selfloop);
  mod.def("pair_metrics", &gcl::pair_metrics, py::arg("model"), py::arg("source"),
          py::arg("target"), py::arg("config"));
  mod.def("save_model", &gcl::save_model, py::arg("model"), py::arg("path"));
  mod.def("load_model", &gcl::load_model, py::arg("path"));
}
