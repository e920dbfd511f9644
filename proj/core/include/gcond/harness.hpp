#pragma once

// Two-stage evaluation: train a fresh model on a reduced graph, then infer on
// the original graph and score its test split.

#include "gcond/condense.hpp"
#include "gcond/coresets.hpp"
#include "gcond/gnn.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gcond {

enum class StructureKind {
  identity,  // A = I; the stored adjacency is never read
  learned,   // finalized A' of a condensed graph
  induced,   // real edges among selected nodes
  whole,     // the original graph
};

std::string_view to_string(StructureKind k) noexcept;

/// Training data of the first evaluation stage.
struct ReducedGraph {
  std::string method;
  Propagation prop;
  Features features;
  std::vector<int> labels;
  std::vector<Index> train_nodes;
  StructureKind structure = StructureKind::whole;
  GraphStats stats;

  Index nodes() const { return static_cast<Index>(labels.size()); }

  /// Requires a finalized graph unless the variant uses the identity structure.
  static ReducedGraph from_condensed(const CondensedGraph& cond);
  static ReducedGraph from_selection(const SparseGraph& graph, const Selection& sel);
  /// The original graph trained on its own train split.
  static ReducedGraph whole_graph(const SparseGraph& graph);
};

struct EvalSpec {
  ModelSpec model{Arch::gcn, 2, 256, 2, 0.1, 0.0, 0.0};
  TrainOptions train{};  // 600 epochs, lr 0.01, weight decay 5e-4
  int repeats = 10;
  std::uint64_t seed = 0;
  bool parallel = false;
};

/// Standard evaluation model for an architecture: 2 layers of 256 units.
ModelSpec eval_model(Arch arch);

struct EvalReport {
  std::string method;
  std::string dataset;
  double ratio = 0.0;
  Index nodes = 0;
  std::string eval_arch;
  std::vector<double> accuracies;  // per repeat, in seed order
  std::vector<int> best_epochs;
  double mean = 0.0;
  double stddev = 0.0;  // n-1 denominator; 0 for one repeat
  GraphStats stats;
  StructureKind structure = StructureKind::whole;
  double seconds = 0.0;
  std::map<std::string, std::string> config;  // echoed as report.<i>.config.<key>
};

/// Population-corrected mean and standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

/// Trains `spec.repeats` models on `reduced` and scores them on the test split
/// of `graph` (transductive: inference on the full original graph).
EvalReport evaluate(const ReducedGraph& reduced, const SparseGraph& graph, const EvalSpec& spec,
                    const std::string& dataset = {});

struct CrossTable {
  std::vector<std::string> condense_archs;
  std::vector<std::string> eval_archs;
  std::vector<std::vector<EvalReport>> cells;  // [condense][eval]
};

/// Evaluates one reduced graph with several architectures.
std::vector<EvalReport> cross_evaluate(const ReducedGraph& reduced, const SparseGraph& graph,
                                       std::span<const Arch> eval_archs, const EvalSpec& spec,
                                       const std::string& dataset = {});

/// Condenses once per condensation architecture, then evaluates every pair.
CrossTable cross_architecture(const SparseGraph& graph, const CondenseConfig& config,
                              std::span<const Arch> condense_archs, std::span<const Arch> eval_archs,
                              const EvalSpec& spec, const std::string& dataset = {});

/// Settings of an evaluation, for the report's config echo.
std::map<std::string, std::string> eval_echo(const EvalSpec& spec);

/// Text tables followed by a fenced key=value block.
std::string render_report(std::span<const EvalReport> reports);
std::string render_cross_table(const CrossTable& table);

}  // namespace gcond
