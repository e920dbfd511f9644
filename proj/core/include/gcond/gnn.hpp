#pragma once

// GNN architectures, parameter initialization, the supervised trainer and
// closed-form parameter gradients for the condensation models.

#include "gcond/graph.hpp"
#include "gcond/tape.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace gcond {

enum class Arch { sgc, gcn, appnp, sage, mlp };

std::string_view to_string(Arch arch) noexcept;
/// Accepts sgc, gcn, appnp, sage, mlp.
Arch parse_arch(std::string_view name);

struct ModelSpec {
  Arch arch = Arch::gcn;
  int layers = 2;
  Index hidden = 256;
  int k_prop = 2;      // propagation steps (SGC, APPNP)
  double alpha = 0.1;  // APPNP teleport coefficient
  double dropout = 0.0;
  double weight_decay = 0.0;

  void validate() const;
};

/// Weights and biases per transformation layer; biases are 1 x out rows.
struct ModelParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;
  std::uint64_t seed = 0;

  std::size_t num_tensors() const { return weights.size() + biases.size(); }
  /// Pointers in tensor order W0, b0, W1, b1, ...
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ModelParams init_params(const ModelSpec& spec, Index in_dim, Index out_dim, std::uint64_t seed);

/// Records params on a tape in tensor order W0, b0, W1, b1, ...
std::vector<tape::Var> bind(tape::Tape& t, const ModelParams& params, bool requires_grad);

/// Propagation operators derived from a raw (unnormalized) adjacency.
struct Propagation {
  std::shared_ptr<const CsrMatrix> sym;   // D^-1/2 (A+I) D^-1/2
  std::shared_ptr<const CsrMatrix> mean;  // neighbor mean, no self loops
  bool identity = false;                  // built from an identity structure

  static Propagation from_adjacency(const CsrMatrix& raw);
  static Propagation from_dense(const Matrix& raw);
  /// A = I: sym is the identity, mean is empty.
  static Propagation identity_of(Index n);
  Index nodes() const { return sym->rows; }
};

/// Node features. Sparse storage is used for the first linear layer when set.
struct Features {
  std::shared_ptr<const Matrix> dense;
  std::shared_ptr<const CsrMatrix> sparse;

  static Features of(Matrix dense);
  /// Keeps a CSR copy too when at most `max_density` of the entries are nonzero.
  static Features of_auto(const Matrix& dense, double max_density = 0.2);
  Index rows() const;
  Index cols() const;
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

/// Logits for every node.
tape::Var forward(tape::Tape& t, const ModelSpec& spec, std::span<const tape::Var> params,
                  const Propagation& prop, const Features& x, ForwardOptions opts = {});

/// Inference-only forward.
Matrix predict(const ModelSpec& spec, const ModelParams& params, const Propagation& prop,
               const Features& x);

double accuracy(const Matrix& logits, std::span<const Index> nodes, std::span<const int> labels);

// --- training ------------------------------------------------------------

enum class Optimizer { adam, sgd };

struct TrainOptions {
  int epochs = 600;
  double lr = 0.01;
  double weight_decay = 5e-4;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t dropout_seed = 0;
};

/// Supervised nodes on a graph. `labels` is indexed by node id.
struct LabeledGraph {
  const Propagation* prop = nullptr;
  const Features* features = nullptr;
  std::span<const Index> nodes;
  std::span<const int> labels;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_curve;
  std::vector<double> val_curve;  // empty without validation data
  int best_epoch = -1;            // -1: final parameters returned
};

/// Full-batch training. With validation data, returns the parameters of the
/// first epoch reaching the best validation accuracy.
TrainResult train(const ModelSpec& spec, ModelParams params, const LabeledGraph& data,
                  const TrainOptions& opts, const LabeledGraph* validation = nullptr);

// --- closed-form parameter gradients -------------------------------------

/// Normalized propagation operand: constant sparse, or dense and differentiable.
using PropagationOperand = std::variant<std::shared_ptr<const CsrMatrix>, tape::Var>;

/// Cross-entropy gradient w.r.t. every parameter tensor (order W0, b0, W1,
/// b1, ...), written as primal tape ops so the result is differentiable in
/// `adj` and `x`. Loss is the mean over `rows` with `row_labels`. Supports
/// SGC and GCN with one or two transformation layers; dropout is not applied.
std::vector<tape::Var> inner_param_grads(const ModelSpec& spec, const ModelParams& params,
                                         const PropagationOperand& adj, tape::Var x,
                                         std::span<const Index> rows,
                                         std::span<const int> row_labels);

}  // namespace gcond
