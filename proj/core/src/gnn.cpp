#include "gcond/gnn.hpp"

#include "gcond/error.hpp"
#include "gcond/optim.hpp"

#include <cmath>
#include <random>
#include <string>

namespace gcond {

using tape::Tape;
using tape::Var;

std::string_view to_string(Arch arch) noexcept {
  switch (arch) {
    case Arch::sgc: return "sgc";
    case Arch::gcn: return "gcn";
    case Arch::appnp: return "appnp";
    case Arch::sage: return "sage";
    case Arch::mlp: return "mlp";
  }
  return "?";
}

Arch parse_arch(std::string_view name) {
  for (Arch a : {Arch::sgc, Arch::gcn, Arch::appnp, Arch::sage, Arch::mlp}) {
    if (name == to_string(a)) return a;
  }
  fail(ErrorCode::config, "unknown architecture '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  require(layers >= 1, ErrorCode::validation, "model: layers must be >= 1");
  require(hidden >= 1, ErrorCode::validation, "model: hidden must be >= 1");
  require(dropout >= 0.0 && dropout < 1.0, ErrorCode::validation, "model: dropout outside [0,1)");
  require(weight_decay >= 0.0, ErrorCode::validation, "model: negative weight decay");
  if (arch == Arch::sgc || arch == Arch::appnp) {
    require(k_prop >= 1, ErrorCode::validation, "model: k_prop must be >= 1");
  }
  if (arch == Arch::appnp) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::validation, "model: alpha outside [0,1]");
  }
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  std::vector<const Matrix*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

ModelParams init_params(const ModelSpec& spec, Index in_dim, Index out_dim, std::uint64_t seed) {
  spec.validate();
  require(in_dim >= 1 && out_dim >= 1, ErrorCode::validation, "init_params: dims must be >= 1");
  ModelParams p;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  const Index width = spec.arch == Arch::sage ? 2 : 1;
  for (int l = 0; l < spec.layers; ++l) {
    const Index fan_in = (l == 0 ? in_dim : spec.hidden);
    const Index fan_out = (l == spec.layers - 1 ? out_dim : spec.hidden);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(width * fan_in, fan_out);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Matrix::Zero(1, fan_out));
  }
  return p;
}

std::vector<Var> bind(Tape& t, const ModelParams& params, bool requires_grad) {
  std::vector<Var> out;
  for (const Matrix* m : params.tensors()) {
    out.push_back(requires_grad ? t.variable(*m) : t.constant(*m));
  }
  return out;
}

// --- propagation and features -----------------------------------------------

Propagation Propagation::from_adjacency(const CsrMatrix& raw) {
  Propagation p;
  p.sym = std::make_shared<const CsrMatrix>(normalize_sym(raw, true));
  p.mean = std::make_shared<const CsrMatrix>(normalize_mean(raw));
  return p;
}

Propagation Propagation::from_dense(const Matrix& raw) {
  return from_adjacency(CsrMatrix::from_dense(raw));
}

Propagation Propagation::identity_of(Index n) {
  Propagation p;
  // normalize_sym(I) with an added self loop is again I.
  p.sym = std::make_shared<const CsrMatrix>(CsrMatrix::identity(n));
  CsrMatrix empty;
  empty.rows = empty.cols = n;
  empty.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  p.mean = std::make_shared<const CsrMatrix>(std::move(empty));
  p.identity = true;
  return p;
}

Features Features::of(Matrix dense) {
  Features f;
  f.dense = std::make_shared<const Matrix>(std::move(dense));
  return f;
}

Features Features::of_auto(const Matrix& dense, double max_density) {
  Features f;
  f.dense = std::make_shared<const Matrix>(dense);
  const double nnz = static_cast<double>((dense.array() != 0.0).count());
  if (dense.size() > 0 && nnz <= max_density * static_cast<double>(dense.size())) {
    f.sparse = std::make_shared<const CsrMatrix>(CsrMatrix::from_dense(dense));
  }
  return f;
}

Index Features::rows() const { return dense ? dense->rows() : sparse->rows; }
Index Features::cols() const { return dense ? dense->cols() : sparse->cols; }

// --- forward ---------------------------------------------------------------

namespace {

Var linear_in(Tape& t, const Features& x, Var w) {
  if (x.sparse) return spmm(x.sparse, w);
  return matmul(t.constant(*x.dense), w);
}

Var propagate(const std::shared_ptr<const CsrMatrix>& a, Var h, int steps) {
  for (int k = 0; k < steps; ++k) h = spmm(a, h);
  return h;
}

// Layers after the first: relu, dropout, affine.
Var mlp_tail(Var h, std::span<const Var> params, int from_layer, int layers,
             const ModelSpec& spec, const ForwardOptions& opts) {
  for (int l = from_layer; l < layers; ++l) {
    h = relu(h);
    if (opts.training) h = tape::dropout(h, spec.dropout, opts.dropout_seed + static_cast<std::uint64_t>(l));
    h = add_row(matmul(h, params[2 * l]), params[2 * l + 1]);
  }
  return h;
}

}  // namespace

Var forward(Tape& t, const ModelSpec& spec, std::span<const Var> params, const Propagation& prop,
            const Features& x, ForwardOptions opts) {
  spec.validate();
  require(static_cast<int>(params.size()) == 2 * spec.layers, ErrorCode::dimension,
          "forward: expected " + std::to_string(2 * spec.layers) + " parameter tensors");
  require(x.rows() == prop.nodes(), ErrorCode::dimension,
          "forward: feature rows " + std::to_string(x.rows()) + " != graph nodes " +
              std::to_string(prop.nodes()));
  const Index width = spec.arch == Arch::sage ? 2 : 1;
  require(params[0].rows() == width * x.cols(), ErrorCode::dimension,
          "forward: first weight has " + std::to_string(params[0].rows()) +
              " rows for feature dim " + std::to_string(x.cols()));

  switch (spec.arch) {
    case Arch::mlp: {
      Var h = add_row(linear_in(t, x, params[0]), params[1]);
      return mlp_tail(h, params, 1, spec.layers, spec, opts);
    }
    case Arch::sgc: {
      // A^K (X W) == (A^K X) W; the left form keeps sparse inputs sparse.
      Var h = add_row(propagate(prop.sym, linear_in(t, x, params[0]), spec.k_prop), params[1]);
      return mlp_tail(h, params, 1, spec.layers, spec, opts);
    }
    case Arch::appnp: {
      Var z0 = add_row(linear_in(t, x, params[0]), params[1]);
      z0 = mlp_tail(z0, params, 1, spec.layers, spec, opts);
      Var z = z0;
      for (int k = 0; k < spec.k_prop; ++k) {
        z = add(scale(spmm(prop.sym, z), 1.0 - spec.alpha), scale(z0, spec.alpha));
      }
      return z;
    }
    case Arch::gcn: {
      Var h = add_row(spmm(prop.sym, linear_in(t, x, params[0])), params[1]);
      for (int l = 1; l < spec.layers; ++l) {
        h = relu(h);
        if (opts.training) h = tape::dropout(h, spec.dropout, opts.dropout_seed + static_cast<std::uint64_t>(l));
        h = add_row(spmm(prop.sym, matmul(h, params[2 * l])), params[2 * l + 1]);
      }
      return h;
    }
    case Arch::sage: {
      // concat(H, M H) W == H W_self + M (H W_neigh)
      auto layer = [&](auto&& lin, Index in_dim, int l) {
        Var w = params[2 * l];
        Var self = lin(row_block(w, 0, in_dim));
        Var neigh = spmm(prop.mean, lin(row_block(w, in_dim, in_dim)));
        return add_row(add(self, neigh), params[2 * l + 1]);
      };
      Var h = layer([&](Var w) { return linear_in(t, x, w); }, x.cols(), 0);
      for (int l = 1; l < spec.layers; ++l) {
        h = relu(h);
        if (opts.training) h = tape::dropout(h, spec.dropout, opts.dropout_seed + static_cast<std::uint64_t>(l));
        Var in = h;
        h = layer([&](Var w) { return matmul(in, w); }, spec.hidden, l);
      }
      return h;
    }
  }
  fail(ErrorCode::capability, "forward: unknown architecture");
}

Matrix predict(const ModelSpec& spec, const ModelParams& params, const Propagation& prop,
               const Features& x) {
  Tape t;
  std::vector<Var> vars = bind(t, params, false);
  return forward(t, spec, vars, prop, x).value();
}

double accuracy(const Matrix& logits, std::span<const Index> nodes, std::span<const int> labels) {
  if (nodes.empty()) return 0.0;
  Index hits = 0;
  for (Index v : nodes) {
    Index arg = 0;
    logits.row(v).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(v)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

// --- training --------------------------------------------------------------

TrainResult train(const ModelSpec& spec, ModelParams params, const LabeledGraph& data,
                  const TrainOptions& opts, const LabeledGraph* validation) {
  require(!data.nodes.empty(), ErrorCode::validation, "train: no labeled training nodes");
  std::vector<int> y;
  y.reserve(data.nodes.size());
  for (Index v : data.nodes) y.push_back(data.labels[static_cast<std::size_t>(v)]);
  std::vector<Index> rows(data.nodes.begin(), data.nodes.end());

  TrainResult result;
  result.params = params;
  double best_val = -1.0;
  Adam adam(opts.lr);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<Matrix> grads;
    {
      Tape t;
      std::vector<Var> vars = bind(t, params, true);
      ForwardOptions fo{spec.dropout > 0.0, opts.dropout_seed * 1000003ULL + static_cast<std::uint64_t>(epoch)};
      Var logits = forward(t, spec, vars, *data.prop, *data.features, fo);
      Var loss = softmax_cross_entropy(gather_rows(logits, rows), y);
      const double l = loss.value()(0, 0);
      if (!std::isfinite(l)) {
        fail(ErrorCode::diverged, "train: non-finite loss at epoch " + std::to_string(epoch));
      }
      result.loss_curve.push_back(l);
      t.backward(loss);
      for (Var v : vars) grads.push_back(t.grad(v));
    }
    std::vector<Matrix*> ps = params.tensors();
    if (opts.weight_decay > 0.0) {
      for (std::size_t i = 0; i < ps.size(); ++i) grads[i] += opts.weight_decay * *ps[i];
    }
    if (opts.optimizer == Optimizer::adam) {
      adam.step(ps, grads);
    } else {
      sgd_step(ps, grads, opts.lr);
    }
    if (validation != nullptr) {
      Matrix logits = predict(spec, params, *validation->prop, *validation->features);
      const double acc = accuracy(logits, validation->nodes, validation->labels);
      result.val_curve.push_back(acc);
      if (acc > best_val) {
        best_val = acc;
        result.best_epoch = epoch;
        result.params = params;
      }
    }
  }
  if (validation == nullptr) result.params = params;
  return result;
}

// --- closed-form parameter gradients ------------------------------------------

namespace {

// Row-restricted copy of a sparse operator.
std::shared_ptr<const CsrMatrix> select_rows(const CsrMatrix& a, std::span<const Index> rows) {
  CsrMatrix out;
  out.rows = static_cast<Index>(rows.size());
  out.cols = a.cols;
  for (Index r : rows) {
    for (Index k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      out.col_idx.push_back(a.col_idx[k]);
      out.values.push_back(a.values[k]);
    }
    out.row_ptr.push_back(out.nnz());
  }
  return std::make_shared<const CsrMatrix>(std::move(out));
}

struct Operand {
  const PropagationOperand& adj;

  Var apply(Var h) const {
    if (auto* s = std::get_if<std::shared_ptr<const CsrMatrix>>(&adj)) return spmm(*s, h);
    return matmul(std::get<Var>(adj), h);
  }
  // Rows of (A h) for the given row subset, plus the operator needed for A_rows^T g.
  Var apply_rows(Var h, std::span<const Index> rows, Var* rows_op,
                 std::shared_ptr<const CsrMatrix>* rows_csr) const {
    if (auto* s = std::get_if<std::shared_ptr<const CsrMatrix>>(&adj)) {
      *rows_csr = select_rows(**s, rows);
      return spmm(*rows_csr, h);
    }
    *rows_op = gather_rows(std::get<Var>(adj), rows);
    return matmul(*rows_op, h);
  }
};

Matrix positive_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

}  // namespace

std::vector<Var> inner_param_grads(const ModelSpec& spec, const ModelParams& params,
                                   const PropagationOperand& adj, Var x,
                                   std::span<const Index> rows, std::span<const int> row_labels) {
  require(spec.arch == Arch::sgc || spec.arch == Arch::gcn, ErrorCode::capability,
          "inner_param_grads: only sgc and gcn are supported, got " + std::string(to_string(spec.arch)));
  require(spec.layers == 1 || spec.layers == 2, ErrorCode::capability,
          "inner_param_grads: supports 1 or 2 transformation layers");
  require(static_cast<int>(params.weights.size()) == spec.layers, ErrorCode::dimension,
          "inner_param_grads: parameter count does not match spec");
  require(rows.size() == row_labels.size() && !rows.empty(), ErrorCode::dimension,
          "inner_param_grads: rows/labels mismatch or empty");
  if (auto* v = std::get_if<Var>(&adj)) {
    require(v->tape() == x.tape(), ErrorCode::validation, "inner_param_grads: operands on different tapes");
  }

  Tape& t = *x.tape();
  const Operand op{adj};
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  const Index classes = params.weights.back().cols();
  Var target = t.constant(tape::one_hot(row_labels, classes));
  auto delta_of = [&](Var logits) { return scale(sub(softmax_rows(logits), target), inv_n); };
  auto weight = [&](int l) { return t.constant(params.weights[static_cast<std::size_t>(l)]); };
  auto bias = [&](int l) { return t.constant(params.biases[static_cast<std::size_t>(l)]); };

  if (spec.arch == Arch::sgc) {
    Var p = x;
    for (int k = 0; k < spec.k_prop; ++k) p = op.apply(p);
    Var pr = gather_rows(p, rows);
    if (spec.layers == 1) {
      Var delta = delta_of(add_row(matmul(pr, weight(0)), bias(0)));
      return {matmul(transpose(pr), delta), column_sums(delta)};
    }
    Var pre = add_row(matmul(pr, weight(0)), bias(0));
    Var h = relu(pre);
    Var delta = delta_of(add_row(matmul(h, weight(1)), bias(1)));
    Var d1 = mul_const(matmul(delta, transpose(weight(1))), positive_mask(pre.value()));
    return {matmul(transpose(pr), d1), column_sums(d1), matmul(transpose(h), delta),
            column_sums(delta)};
  }

  // GCN
  if (spec.layers == 1) {
    Var rows_op;
    std::shared_ptr<const CsrMatrix> rows_csr;
    Var zr = op.apply_rows(x, rows, &rows_op, &rows_csr);
    Var delta = delta_of(add_row(matmul(zr, weight(0)), bias(0)));
    return {matmul(transpose(zr), delta), column_sums(delta)};
  }
  Var z1 = op.apply(x);
  Var pre1 = add_row(matmul(z1, weight(0)), bias(0));
  Var h1 = relu(pre1);
  Var rows_op;
  std::shared_ptr<const CsrMatrix> rows_csr;
  Var z2 = op.apply_rows(h1, rows, &rows_op, &rows_csr);
  Var delta = delta_of(add_row(matmul(z2, weight(1)), bias(1)));
  Var dz2 = matmul(delta, transpose(weight(1)));
  Var dh1 = rows_csr ? spmm_transposed(rows_csr, dz2) : matmul(transpose(rows_op), dz2);
  Var dpre1 = mul_const(dh1, positive_mask(pre1.value()));
  return {matmul(transpose(z1), dpre1), column_sums(dpre1), matmul(transpose(z2), delta),
          column_sums(delta)};
}

}  // namespace gcond
