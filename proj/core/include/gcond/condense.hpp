#pragma once

// Graph condensation by per-class gradient matching.
//
// The synthetic graph is S = {A', X', Y'} with A' produced from X' by a
// pairwise MLP (the structure generator). Each iteration compares, class by
// class, the parameter gradients of a GNN on a sampled real batch against the
// gradients on the synthetic nodes of that class, and descends the summed
// column-wise cosine distance with respect to X' and the generator.

#include "gcond/gnn.hpp"
#include "gcond/graph.hpp"
#include "gcond/tape.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gcond {

enum class Variant {
  gcond,     // learn X' and the structure generator
  gcond_x,   // learn X' only; A' = I
  dc_graph,  // learn X' only; real side ignores the graph as well
};

std::string_view to_string(Variant v) noexcept;
/// Accepts gcond, gcond-x, dc-graph.
Variant parse_variant(std::string_view name);

enum class Schedule {
  alternate,  // generator for tau1 iterations, then X' for tau2 iterations
  joint,      // both every iteration
};

enum class Execution { serial, parallel };

struct CondenseConfig {
  double ratio = 0.0;  // N' = round(ratio * N) unless `nodes` is set
  Index nodes = 0;
  int outer = 10;      // K: fresh parameter initializations
  int inner = 50;      // T: matching iterations per initialization
  int tau1 = 10;       // generator iterations per alternation cycle
  int tau2 = 1;        // feature iterations per alternation cycle
  int tau_theta = 50;  // gradient-descent steps on S after each iteration
  double lr_feat = 0.01;
  double lr_phi = 0.01;
  double lr_theta = 0.01;
  Index batch_size = 256;
  Index fanout = 5;
  ModelSpec model{Arch::sgc, 2, 256, 2, 0.1, 0.0, 0.0};
  int phi_layers = 3;
  Index phi_hidden = 128;
  double delta = 0.05;
  std::uint64_t seed = 0;
  Schedule schedule = Schedule::alternate;
  Execution execution = Execution::serial;

  void validate() const;
  /// N' for an original graph with n nodes.
  Index resolve_nodes(Index n) const;
};

/// MLP mapping a concatenated feature pair [x_i; x_j] (2d) to a scalar logit.
struct StructureGenerator {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;

  static StructureGenerator init(Index feature_dim, int layers, Index hidden, std::uint64_t seed);
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  bool empty() const { return weights.empty(); }
};

struct CondensedGraph {
  Matrix features;  // X', N' x d
  StructureGenerator phi;
  std::vector<int> labels;  // Y', fixed
  int num_classes = 0;
  double delta = 0.0;
  Variant variant = Variant::gcond;
  std::optional<Matrix> adjacency;  // materialized A', present after finalize()

  Index nodes() const { return features.rows(); }
  /// Synthetic node ids of a class, ascending.
  std::vector<Index> nodes_of(int class_id) const;
};

// --- building blocks ---------------------------------------------------------

/// sum_i (1 - cos(gS_i, gT_i)) over columns; a 1 x c row is one column.
/// Columns with norm < 1e-12 contribute 0 if both sides vanish, 1 if one does.
/// No gradient flows to `gt`.
tape::Var match_distance(tape::Var gs, const Matrix& gt);

/// A'_ij = sigmoid((MLP([x_i; x_j]) + MLP([x_j; x_i])) / 2), differentiable in
/// both the generator parameters (tensor order W0, b0, W1, b1, ...) and x.
tape::Var gphi_forward(std::span<const tape::Var> phi, tape::Var x);
Matrix gphi_forward(const StructureGenerator& phi, const Matrix& x);

/// Splits `total` over classes in proportion to `class_counts` by largest
/// remainder, giving every class at least one node.
std::vector<Index> allocate_counts(std::span<const Index> class_counts, Index total);

CondensedGraph init_condensed(const SparseGraph& graph, const CondenseConfig& config,
                              Variant variant = Variant::gcond);

// --- matching objective -------------------------------------------------

/// Real-side gradients for one class plus the synthetic rows they are matched against.
struct ClassTarget {
  int class_id = 0;
  std::vector<Matrix> real_grads;  // tensor order of ModelParams
  std::vector<Index> syn_rows;
};

/// Samples one class batch per class and computes its parameter gradients.
std::vector<ClassTarget> sample_targets(const SparseGraph& graph, const CondensedGraph& cond,
                                        const CondenseConfig& config, const ModelParams& theta,
                                        std::mt19937_64& rng);

struct MatchingResult {
  double loss = 0.0;
  std::vector<double> per_class;
  Matrix grad_features;           // empty when gradients were not requested
  std::vector<Matrix> grad_phi;   // empty for the identity-structure variants
};

/// Total matching loss D' over all targets, optionally with its gradients.
/// Parallel execution builds one tape per class and sums in class order.
MatchingResult matching_loss(const CondensedGraph& cond, const ModelSpec& spec,
                             const ModelParams& theta, std::span<const ClassTarget> targets,
                             bool with_grads, Execution execution = Execution::serial);

/// `steps` plain gradient-descent steps of the cross-entropy over all rows,
/// for SGC/GCN with 1 or 2 layers; `norm_adj` is already normalized. Equal to
/// train() with the sgd optimizer and no weight decay, but keeps the first
/// layer's update in the row space of its N' x d input, so a step costs
/// O(N'^2 h) instead of O(N' d h).
ModelParams refresh_theta(const ModelSpec& spec, ModelParams theta, const Matrix& norm_adj,
                          const Matrix& x, std::span<const int> labels, int steps, double lr);

// --- driver ---------------------------------------------------------------

struct CondenseResult {
  CondensedGraph graph;
  std::vector<double> loss_trace;  // D' per iteration, K*T entries
  Index requested_nodes = 0;
  double seconds = 0.0;
};

using ProgressFn = std::function<void(int outer, int inner, double loss)>;

CondenseResult condense(const SparseGraph& graph, const CondenseConfig& config,
                        Variant variant = Variant::gcond, const ProgressFn& progress = {});

/// Dense A' of the current parameters (identity for the X'-only variants).
Matrix structure(const CondensedGraph& cond);

/// Materializes A' and zeroes entries <= delta.
CondensedGraph finalize(CondensedGraph cond);
/// Same, with an explicit threshold (recorded as the graph's delta).
CondensedGraph finalize(CondensedGraph cond, double delta);

}  // namespace gcond
