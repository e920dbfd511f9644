#include "gcond/harness.hpp"

#include "gcond/error.hpp"
#include "gcond/seed.hpp"

#include <chrono>
#include <cstdio>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace gcond {

std::string_view to_string(StructureKind k) noexcept {
  switch (k) {
    case StructureKind::identity: return "identity";
    case StructureKind::learned: return "learned";
    case StructureKind::induced: return "induced";
    case StructureKind::whole: return "whole";
  }
  return "?";
}

ReducedGraph ReducedGraph::from_condensed(const CondensedGraph& cond) {
  ReducedGraph r;
  r.method = std::string(to_string(cond.variant));
  r.labels = cond.labels;
  r.train_nodes.resize(cond.labels.size());
  std::iota(r.train_nodes.begin(), r.train_nodes.end(), Index{0});
  r.features = Features::of(cond.features);
  if (cond.variant == Variant::gcond) {
    require(cond.adjacency.has_value(), ErrorCode::validation,
            "evaluate: condensed graph is not finalized");
    const Matrix& a = *cond.adjacency;
    require(a.rows() == cond.nodes() && a.cols() == cond.nodes(), ErrorCode::dimension,
            "evaluate: adjacency does not match the condensed node count");
    const CsrMatrix csr = CsrMatrix::from_dense(a);
    r.prop = Propagation::from_adjacency(csr);
    r.structure = StructureKind::learned;
    r.stats = graph_stats(csr, r.labels, cond.features.cols());
  } else {
    r.prop = Propagation::identity_of(cond.nodes());
    r.structure = StructureKind::identity;
    r.stats = graph_stats(CsrMatrix::identity(cond.nodes()), r.labels, cond.features.cols());
  }
  return r;
}

ReducedGraph ReducedGraph::from_selection(const SparseGraph& graph, const Selection& sel) {
  const SparseGraph sub = induced_subgraph(graph, sel.node_ids);
  ReducedGraph r;
  r.method = std::string(to_string(sel.method));
  r.labels = sub.labels;
  r.train_nodes.resize(sub.labels.size());
  std::iota(r.train_nodes.begin(), r.train_nodes.end(), Index{0});
  r.features = Features::of_auto(sub.features);
  r.prop = Propagation::from_adjacency(sub.adjacency);
  r.structure = StructureKind::induced;
  r.stats = graph_stats(sub.adjacency, sub.labels, sub.feature_dim());
  return r;
}

ReducedGraph ReducedGraph::whole_graph(const SparseGraph& graph) {
  ReducedGraph r;
  r.method = "whole";
  r.labels = graph.labels;
  r.train_nodes = graph.train;
  r.features = Features::of_auto(graph.features);
  r.prop = Propagation::from_adjacency(graph.adjacency);
  r.structure = StructureKind::whole;
  r.stats = graph_stats(graph.adjacency, graph.labels, graph.feature_dim());
  return r;
}

ModelSpec eval_model(Arch arch) {
  ModelSpec m;
  m.arch = arch;
  m.layers = 2;
  m.hidden = 256;
  m.k_prop = arch == Arch::appnp ? 10 : 2;
  m.alpha = 0.1;
  return m;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

EvalReport evaluate(const ReducedGraph& reduced, const SparseGraph& graph, const EvalSpec& spec,
                    const std::string& dataset) {
  require(spec.repeats >= 1, ErrorCode::config, "evaluate: repeats must be >= 1");
  require(reduced.features.cols() == graph.feature_dim(), ErrorCode::dimension,
          "evaluate: reduced features have " + std::to_string(reduced.features.cols()) +
              " columns, original graph has " + std::to_string(graph.feature_dim()));
  spec.model.validate();
  const auto start = std::chrono::steady_clock::now();

  const Propagation full_prop = Propagation::from_adjacency(graph.adjacency);
  const Features full_features = Features::of_auto(graph.features);
  const LabeledGraph data{&reduced.prop, &reduced.features, reduced.train_nodes, reduced.labels};
  const LabeledGraph val{&full_prop, &full_features, graph.val, graph.labels};
  const bool has_val = !graph.val.empty();

  const auto n = static_cast<std::size_t>(spec.repeats);
  std::vector<double> acc(n);
  std::vector<int> best(n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t r) {
    try {
      const std::uint64_t s = derive_seed(spec.seed, kStreamEval, r);
      ModelParams params = init_params(spec.model, graph.feature_dim(), graph.num_classes, s);
      TrainOptions opts = spec.train;
      opts.dropout_seed = derive_seed(spec.seed, kStreamDropout, r);
      TrainResult tr = train(spec.model, std::move(params), data, opts, has_val ? &val : nullptr);
      const Matrix logits = predict(spec.model, tr.params, full_prop, full_features);
      acc[r] = accuracy(logits, graph.test, graph.labels);
      best[r] = tr.best_epoch;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  if (spec.parallel && n > 1) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < n; r += workers) run(r);
      });
    }
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t r = 0; r < n; ++r) run(r);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport rep;
  rep.method = reduced.method;
  rep.dataset = dataset;
  rep.nodes = reduced.nodes();
  rep.ratio = static_cast<double>(reduced.nodes()) / static_cast<double>(graph.num_nodes());
  rep.eval_arch = std::string(to_string(spec.model.arch));
  rep.accuracies = std::move(acc);
  rep.best_epochs = std::move(best);
  std::tie(rep.mean, rep.stddev) = mean_std(rep.accuracies);
  rep.stats = reduced.stats;
  rep.structure = reduced.structure;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<EvalReport> cross_evaluate(const ReducedGraph& reduced, const SparseGraph& graph,
                                       std::span<const Arch> eval_archs, const EvalSpec& spec,
                                       const std::string& dataset) {
  std::vector<EvalReport> out;
  for (Arch a : eval_archs) {
    EvalSpec s = spec;
    s.model = eval_model(a);
    out.push_back(evaluate(reduced, graph, s, dataset));
  }
  return out;
}

CrossTable cross_architecture(const SparseGraph& graph, const CondenseConfig& config,
                              std::span<const Arch> condense_archs, std::span<const Arch> eval_archs,
                              const EvalSpec& spec, const std::string& dataset) {
  CrossTable table;
  for (Arch a : eval_archs) table.eval_archs.emplace_back(to_string(a));
  for (Arch c : condense_archs) {
    require(c == Arch::sgc || c == Arch::gcn, ErrorCode::config,
            "cross_architecture: condensation architectures must be sgc or gcn");
    CondenseConfig cfg = config;
    cfg.model.arch = c;
    const CondenseResult res = condense(graph, cfg, Variant::gcond);
    const ReducedGraph reduced = ReducedGraph::from_condensed(res.graph);
    table.condense_archs.emplace_back(to_string(c));
    table.cells.push_back(cross_evaluate(reduced, graph, eval_archs, spec, dataset));
  }
  return table;
}

namespace {

std::string pct(double v, double s) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(1);
  o << 100.0 * v << "+-" << 100.0 * s;
  return o.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> eval_echo(const EvalSpec& spec) {
  std::map<std::string, std::string> e;
  e["eval.arch"] = std::string(to_string(spec.model.arch));
  e["eval.layers"] = std::to_string(spec.model.layers);
  e["eval.hidden"] = std::to_string(spec.model.hidden);
  e["eval.k_prop"] = std::to_string(spec.model.k_prop);
  e["eval.alpha"] = g17(spec.model.alpha);
  e["eval.dropout"] = g17(spec.model.dropout);
  e["eval.epochs"] = std::to_string(spec.train.epochs);
  e["eval.lr"] = g17(spec.train.lr);
  e["eval.weight_decay"] = g17(spec.train.weight_decay);
  e["eval.optimizer"] = spec.train.optimizer == Optimizer::adam ? "adam" : "sgd";
  e["eval.repeats"] = std::to_string(spec.repeats);
  e["eval.seed"] = std::to_string(spec.seed);
  return e;
}

std::string render_report(std::span<const EvalReport> reports) {
  std::ostringstream o;
  o << "== accuracy ==\n";
  o << "method\tdataset\tnodes\tratio\tarch\ttest_acc\n";
  for (const auto& r : reports) {
    o << r.method << '\t' << r.dataset << '\t' << r.nodes << '\t' << fixed(100.0 * r.ratio, 2)
      << "%\t" << r.eval_arch << '\t' << pct(r.mean, r.stddev) << '\n';
  }
  o << "\n== graph statistics ==\n";
  o << "method\tnodes\tedges\tsparsity\thomophily\tstorage_mb\n";
  for (const auto& r : reports) {
    o << r.method << '\t' << r.stats.nodes << '\t' << r.stats.edges << '\t'
      << fixed(r.stats.sparsity, 2) << "%\t" << fixed(r.stats.homophily, 2) << '\t'
      << fixed(r.stats.storage_mb(), 1) << '\n';
  }
  o << "\n```\n";
  o << "reports=" << reports.size() << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const std::string p = "report." + std::to_string(i) + ".";
    o << p << "method=" << r.method << '\n';
    o << p << "dataset=" << r.dataset << '\n';
    o << p << "nodes=" << r.nodes << '\n';
    o << p << "ratio=" << fixed(r.ratio, 6) << '\n';
    o << p << "eval_arch=" << r.eval_arch << '\n';
    o << p << "structure=" << to_string(r.structure) << '\n';
    o << p << "repeats=" << r.accuracies.size() << '\n';
    for (std::size_t k = 0; k < r.accuracies.size(); ++k) {
      o << p << "acc." << k << '=' << fixed(r.accuracies[k], 6) << '\n';
    }
    o << p << "mean=" << fixed(r.mean, 6) << '\n';
    o << p << "std=" << fixed(r.stddev, 6) << '\n';
    o << p << "edges=" << r.stats.edges << '\n';
    o << p << "sparsity=" << fixed(r.stats.sparsity, 6) << '\n';
    o << p << "homophily=" << fixed(r.stats.homophily, 6) << '\n';
    o << p << "storage_mb=" << fixed(r.stats.storage_mb(), 6) << '\n';
    o << p << "seconds=" << fixed(r.seconds, 3) << '\n';
    for (const auto& [k, v] : r.config) o << p << "config." << k << '=' << v << '\n';
  }
  o << "```\n";
  return o.str();
}

std::string render_cross_table(const CrossTable& table) {
  std::ostringstream o;
  o << "condensed_by";
  for (const auto& e : table.eval_archs) o << '\t' << e;
  o << '\n';
  for (std::size_t i = 0; i < table.condense_archs.size(); ++i) {
    o << table.condense_archs[i];
    for (const auto& r : table.cells[i]) o << '\t' << pct(r.mean, r.stddev);
    o << '\n';
  }
  return o.str();
}

}  // namespace gcond
