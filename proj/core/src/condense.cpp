#include "gcond/condense.hpp"

#include "gcond/error.hpp"
#include "gcond/optim.hpp"
#include "gcond/seed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

namespace gcond {

using tape::Tape;
using tape::Var;

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::gcond: return "gcond";
    case Variant::gcond_x: return "gcond-x";
    case Variant::dc_graph: return "dc-graph";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::gcond, Variant::gcond_x, Variant::dc_graph}) {
    if (name == to_string(v)) return v;
  }
  fail(ErrorCode::config, "unknown condensation method '" + std::string(name) + "'");
}

void CondenseConfig::validate() const {
  const bool has_ratio = ratio != 0.0;
  const bool has_nodes = nodes != 0;
  require(has_ratio != has_nodes, ErrorCode::config, "condense: give exactly one of ratio and nodes");
  if (has_ratio) {
    require(ratio > 0.0 && ratio < 1.0, ErrorCode::config, "condense: ratio must lie in (0,1)");
  } else {
    require(nodes >= 1, ErrorCode::config, "condense: nodes must be >= 1");
  }
  require(outer >= 1 && inner >= 1, ErrorCode::config, "condense: outer and inner must be >= 1");
  require(tau1 >= 1 && tau2 >= 0, ErrorCode::config, "condense: need tau1 >= 1 and tau2 >= 0");
  require(tau_theta >= 1, ErrorCode::config, "condense: tau_theta must be >= 1");
  require(lr_feat > 0.0 && lr_phi > 0.0 && lr_theta > 0.0, ErrorCode::config,
          "condense: learning rates must be positive");
  require(batch_size >= 1 && fanout >= 1, ErrorCode::config,
          "condense: batch_size and fanout must be >= 1");
  require(model.arch == Arch::sgc || model.arch == Arch::gcn, ErrorCode::config,
          "condense: model must be sgc or gcn");
  require(model.layers == 1 || model.layers == 2, ErrorCode::config,
          "condense: model must have 1 or 2 layers");
  require(phi_layers >= 1 && phi_hidden >= 1, ErrorCode::config,
          "condense: generator needs >= 1 layer and >= 1 hidden unit");
  require(delta >= 0.0 && delta <= 1.0, ErrorCode::config, "condense: delta outside [0,1]");
  model.validate();
}

Index CondenseConfig::resolve_nodes(Index n) const {
  if (nodes > 0) return nodes;
  return static_cast<Index>(std::llround(ratio * static_cast<double>(n)));
}

// --- structure generator -----------------------------------------------------

StructureGenerator StructureGenerator::init(Index feature_dim, int layers, Index hidden,
                                            std::uint64_t seed) {
  require(feature_dim >= 1 && layers >= 1 && hidden >= 1, ErrorCode::validation,
          "structure generator: bad dimensions");
  StructureGenerator g;
  std::mt19937_64 rng(seed);
  Index in = 2 * feature_dim;
  for (int l = 0; l < layers; ++l) {
    const Index out = l + 1 == layers ? 1 : hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(in, out);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    g.weights.push_back(std::move(w));
    g.biases.push_back(Matrix::Zero(1, out));
    in = out;
  }
  return g;
}

std::vector<Matrix*> StructureGenerator::tensors() {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Matrix*> StructureGenerator::tensors() const {
  std::vector<const Matrix*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<Index> CondensedGraph::nodes_of(int class_id) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == class_id) out.push_back(static_cast<Index>(i));
  }
  return out;
}

// --- matching distance ------------------------------------------------------

namespace {

constexpr double kZeroNorm = 1e-12;

}  // namespace

Var match_distance(Var gs, const Matrix& gt) {
  const Matrix& s = gs.value();
  require(s.rows() == gt.rows() && s.cols() == gt.cols(), ErrorCode::dimension,
          "match_distance: shapes " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
              " vs " + std::to_string(gt.rows()) + "x" + std::to_string(gt.cols()));
  // A single row (bias) is one column.
  const bool flat = s.rows() == 1;
  Eigen::RowVectorXd ns, nt, dot;
  if (flat) {
    ns = Eigen::RowVectorXd::Constant(1, s.norm());
    nt = Eigen::RowVectorXd::Constant(1, gt.norm());
    dot = Eigen::RowVectorXd::Constant(1, s.cwiseProduct(gt).sum());
  } else {
    ns = s.colwise().norm();
    nt = gt.colwise().norm();
    dot = s.cwiseProduct(gt).colwise().sum();
  }
  // Backward coefficients: d(-cos)/ds = -(t * inv - s * c) per column.
  Eigen::RowVectorXd inv = Eigen::RowVectorXd::Zero(ns.size());
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(ns.size());
  double total = 0.0;
  for (Index i = 0; i < ns.size(); ++i) {
    const bool zs = ns(i) < kZeroNorm;
    const bool zt = nt(i) < kZeroNorm;
    if (zs && zt) continue;
    if (zs || zt) {
      total += 1.0;
      continue;
    }
    total += 1.0 - dot(i) / (ns(i) * nt(i));
    inv(i) = 1.0 / (ns(i) * nt(i));
    c(i) = dot(i) / (ns(i) * ns(i) * ns(i) * nt(i));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  Tape& t = *gs.tape();
  return t.record(std::move(out), gs.requires_grad(),
                  [gs, gt, flat, inv = std::move(inv), c = std::move(c)](Tape& t, const Matrix& g) {
                    const Matrix& s = t.value(gs);
                    const double go = g(0, 0);
                    if (flat) {
                      t.accumulate(gs, -go * (gt * inv(0) - s * c(0)));
                      return;
                    }
                    Matrix grad = (s.array().rowwise() * c.array() - gt.array().rowwise() * inv.array()).matrix();
                    t.accumulate(gs, go * grad);
                  });
}

// --- g_phi ----------------------------------------------------------------

Var gphi_forward(std::span<const Var> phi, Var x) {
  require(phi.size() >= 2 && phi.size() % 2 == 0, ErrorCode::validation,
          "gphi_forward: expected weight/bias pairs");
  const Index n = x.rows();
  const Index d = x.cols();
  require(phi[0].rows() == 2 * d, ErrorCode::dimension,
          "gphi_forward: generator input dim " + std::to_string(phi[0].rows()) +
              " != 2 x feature dim " + std::to_string(2 * d));
  // [x_i; x_j] W0 = x_i W0_top + x_j W0_bottom
  Var u = matmul(x, row_block(phi[0], 0, d));
  Var v = matmul(x, row_block(phi[0], d, d));
  Var h = add_row(pair_sum(u, v), phi[1]);
  const std::size_t layers = phi.size() / 2;
  for (std::size_t l = 1; l < layers; ++l) {
    h = add_row(matmul(relu(h), phi[2 * l]), phi[2 * l + 1]);
  }
  require(h.cols() == 1, ErrorCode::dimension, "gphi_forward: generator must output one logit");
  Var m = reshape(h, n, n);
  return sigmoid(scale(add(m, transpose(m)), 0.5));
}

Matrix gphi_forward(const StructureGenerator& phi, const Matrix& x) {
  require(!phi.empty(), ErrorCode::validation, "gphi_forward: empty generator");
  const Index n = x.rows();
  const Index d = x.cols();
  require(phi.weights[0].rows() == 2 * d, ErrorCode::dimension,
          "gphi_forward: generator input dim does not match features");
  const Matrix u = x * phi.weights[0].topRows(d);
  const Matrix v = x * phi.weights[0].bottomRows(d);
  Matrix h(n * n, u.cols());
  for (Index i = 0; i < n; ++i) {
    h.middleRows(i * n, n) = (v.rowwise() + u.row(i)).rowwise() + phi.biases[0].row(0);
  }
  for (std::size_t l = 1; l < phi.weights.size(); ++l) {
    Matrix next = h.cwiseMax(0.0) * phi.weights[l];
    next.rowwise() += phi.biases[l].row(0);
    h = std::move(next);
  }
  Matrix m = Eigen::Map<const Matrix>(h.data(), n, n);
  Matrix sym = 0.5 * (m + m.transpose());
  return sym.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
}

// --- initialization -------------------------------------------------------

std::vector<Index> allocate_counts(std::span<const Index> class_counts, Index total) {
  const auto classes = static_cast<Index>(class_counts.size());
  require(classes >= 1, ErrorCode::validation, "allocate_counts: no classes");
  require(total >= classes, ErrorCode::infeasible,
          "condensed size " + std::to_string(total) + " is smaller than the number of classes " +
              std::to_string(classes));
  Index sum = 0;
  for (Index c : class_counts) {
    require(c >= 1, ErrorCode::validation, "allocate_counts: every class needs a train node");
    sum += c;
  }
  std::vector<Index> out(class_counts.size());
  std::vector<double> rem(class_counts.size());
  Index assigned = 0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double quota = static_cast<double>(total) * static_cast<double>(class_counts[c]) /
                         static_cast<double>(sum);
    out[c] = static_cast<Index>(std::floor(quota));
    rem[c] = quota - static_cast<double>(out[c]);
    assigned += out[c];
  }
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    ++out[order[k]];
    ++assigned;
  }
  // Lift empty classes to one node, taking from the largest allocations.
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (out[c] > 0) continue;
    out[c] = 1;
    auto donor = std::max_element(out.begin(), out.end());
    --*donor;
  }
  return out;
}

CondensedGraph init_condensed(const SparseGraph& graph, const CondenseConfig& config,
                              Variant variant) {
  config.validate();
  const Index n_syn = config.resolve_nodes(graph.num_nodes());
  const std::vector<Index> counts = allocate_counts(graph.train_class_counts(), n_syn);

  CondensedGraph cond;
  cond.num_classes = graph.num_classes;
  cond.delta = config.delta;
  cond.variant = variant;
  cond.features.resize(n_syn, graph.feature_dim());
  std::mt19937_64 rng(derive_seed(config.seed, kStreamInit));
  Index row = 0;
  for (int c = 0; c < graph.num_classes; ++c) {
    std::vector<Index> pool = graph.train_nodes_of(c);
    const Index want = counts[static_cast<std::size_t>(c)];
    std::vector<Index> picks;
    while (static_cast<Index>(picks.size()) < want) {
      std::shuffle(pool.begin(), pool.end(), rng);
      const auto take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(want) - picks.size());
      picks.insert(picks.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    for (Index v : picks) {
      cond.features.row(row++) = graph.features.row(v);
      cond.labels.push_back(c);
    }
  }
  if (variant == Variant::gcond) {
    cond.phi = StructureGenerator::init(graph.feature_dim(), config.phi_layers, config.phi_hidden,
                                        derive_seed(config.seed, kStreamPhi));
  }
  return cond;
}

// --- targets ----------------------------------------------------------------

std::vector<ClassTarget> sample_targets(const SparseGraph& graph, const CondensedGraph& cond,
                                        const CondenseConfig& config, const ModelParams& theta,
                                        std::mt19937_64& rng) {
  const bool structured = cond.variant != Variant::dc_graph;
  const int hops = !structured ? 0 : config.model.arch == Arch::sgc ? config.model.k_prop
                                                                     : config.model.layers;
  std::vector<ClassTarget> out;
  for (int c = 0; c < cond.num_classes; ++c) {
    ClassTarget target;
    target.class_id = c;
    target.syn_rows = cond.nodes_of(c);
    if (target.syn_rows.empty()) continue;
    const ClassBatch batch =
        sample_class_batch(graph, c, config.batch_size, config.fanout, hops, rng);

    Matrix x(static_cast<Index>(batch.closure.size()), graph.feature_dim());
    for (std::size_t i = 0; i < batch.closure.size(); ++i) {
      x.row(static_cast<Index>(i)) = graph.features.row(batch.closure[i]);
    }
    std::shared_ptr<const CsrMatrix> op;
    if (structured) {
      const SparseGraph sub = induced_subgraph(graph, batch.closure);
      op = std::make_shared<const CsrMatrix>(normalize_sym(sub.adjacency, true));
    } else {
      op = std::make_shared<const CsrMatrix>(CsrMatrix::identity(x.rows()));
    }
    std::vector<Index> rows(batch.nodes.size());
    std::iota(rows.begin(), rows.end(), Index{0});
    const std::vector<int> labels(rows.size(), c);

    Tape t;
    Var xv = t.constant(std::move(x));
    for (Var g : inner_param_grads(config.model, theta, op, xv, rows, labels)) {
      target.real_grads.push_back(g.value());
    }
    out.push_back(std::move(target));
  }
  return out;
}

// --- matching loss ----------------------------------------------------------

namespace {

struct SyntheticSide {
  Var x;
  std::vector<Var> phi;
  // What inner_param_grads sees. For SGC the K propagation steps are applied
  // once here and shared by all classes, leaving a single identity step.
  ModelSpec spec;
  PropagationOperand adj;
  Var input;
};

SyntheticSide bind_synthetic(Tape& t, const CondensedGraph& cond, const ModelSpec& spec,
                             bool with_grads) {
  SyntheticSide side;
  side.spec = spec;
  side.x = with_grads ? t.variable(cond.features) : t.constant(cond.features);
  side.input = side.x;
  auto identity = std::make_shared<const CsrMatrix>(CsrMatrix::identity(cond.nodes()));
  if (cond.variant != Variant::gcond) {
    side.adj = identity;
    return side;
  }
  for (const Matrix* m : cond.phi.tensors()) {
    side.phi.push_back(with_grads ? t.variable(*m) : t.constant(*m));
  }
  Var a = normalize_sym_dense(gphi_forward(side.phi, side.x));
  if (spec.arch == Arch::sgc) {
    for (int k = 0; k < spec.k_prop; ++k) side.input = matmul(a, side.input);
    side.spec.k_prop = 1;
    side.adj = identity;
  } else {
    side.adj = a;
  }
  return side;
}

Var class_distance(const SyntheticSide& side, const ModelParams& theta, const ClassTarget& target) {
  const std::vector<int> labels(target.syn_rows.size(), target.class_id);
  std::vector<Var> gs =
      inner_param_grads(side.spec, theta, side.adj, side.input, target.syn_rows, labels);
  require(gs.size() == target.real_grads.size(), ErrorCode::dimension,
          "matching_loss: real and synthetic gradient counts differ");
  Var d = match_distance(gs[0], target.real_grads[0]);
  for (std::size_t i = 1; i < gs.size(); ++i) d = add(d, match_distance(gs[i], target.real_grads[i]));
  return d;
}

void collect_grads(const Tape& t, const SyntheticSide& side, MatchingResult& out) {
  Matrix gx = t.grad(side.x);
  if (out.grad_features.size() == 0) {
    out.grad_features = std::move(gx);
  } else {
    out.grad_features += gx;
  }
  for (std::size_t i = 0; i < side.phi.size(); ++i) {
    Matrix gp = t.grad(side.phi[i]);
    if (out.grad_phi.size() <= i) {
      out.grad_phi.push_back(std::move(gp));
    } else {
      out.grad_phi[i] += gp;
    }
  }
}

}  // namespace

MatchingResult matching_loss(const CondensedGraph& cond, const ModelSpec& spec,
                             const ModelParams& theta, std::span<const ClassTarget> targets,
                             bool with_grads, Execution execution) {
  MatchingResult result;
  result.per_class.assign(targets.size(), 0.0);
  if (targets.empty()) return result;

  if (execution == Execution::serial) {
    Tape t;
    const SyntheticSide side = bind_synthetic(t, cond, spec, with_grads);
    Var total;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      Var d = class_distance(side, theta, targets[k]);
      result.per_class[k] = d.value()(0, 0);
      total = k == 0 ? d : add(total, d);
    }
    result.loss = total.value()(0, 0);
    if (with_grads) {
      t.backward(total);
      collect_grads(t, side, result);
    }
    return result;
  }

  std::vector<MatchingResult> parts(targets.size());
  std::vector<std::exception_ptr> errors(targets.size());
  const std::size_t workers =
      std::min<std::size_t>(targets.size(), std::max(1u, std::thread::hardware_concurrency()));
  auto work = [&](std::size_t first) {
    for (std::size_t k = first; k < targets.size(); k += workers) {
      try {
        Tape t;
        const SyntheticSide side = bind_synthetic(t, cond, spec, with_grads);
        Var d = class_distance(side, theta, targets[k]);
        parts[k].loss = d.value()(0, 0);
        if (with_grads) {
          t.backward(d);
          collect_grads(t, side, parts[k]);
        }
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    result.per_class[k] = parts[k].loss;
    result.loss += parts[k].loss;
    if (!with_grads) continue;
    if (k == 0) {
      result.grad_features = std::move(parts[k].grad_features);
      result.grad_phi = std::move(parts[k].grad_phi);
    } else {
      result.grad_features += parts[k].grad_features;
      for (std::size_t i = 0; i < result.grad_phi.size(); ++i) result.grad_phi[i] += parts[k].grad_phi[i];
    }
  }
  return result;
}

// --- model refresh -----------------------------------------------------------

ModelParams refresh_theta(const ModelSpec& spec, ModelParams theta, const Matrix& norm_adj,
                          const Matrix& x, std::span<const int> labels, int steps, double lr) {
  require(spec.arch == Arch::sgc || spec.arch == Arch::gcn, ErrorCode::capability,
          "refresh_theta: only sgc and gcn are supported");
  require(spec.layers == 1 || spec.layers == 2, ErrorCode::capability,
          "refresh_theta: supports 1 or 2 layers");
  require(norm_adj.rows() == x.rows() && static_cast<Index>(labels.size()) == x.rows(),
          ErrorCode::dimension, "refresh_theta: adjacency, features and labels disagree");
  if (steps <= 0) return theta;
  const Index n = x.rows();
  const Index classes = theta.weights.back().cols();
  const Matrix y = tape::one_hot(labels, classes);
  const double inv_n = 1.0 / static_cast<double>(n);

  // First-layer input F; W0 = W0_init + F^T M under gradient descent.
  Matrix f = x;
  const int hops = spec.arch == Arch::sgc ? spec.k_prop : 1;
  for (int k = 0; k < hops; ++k) f = norm_adj * f;
  const Matrix base = f * theta.weights[0];
  const Matrix gram = f * f.transpose();
  Matrix m = Matrix::Zero(n, theta.weights[0].cols());
  Matrix& b0 = theta.biases[0];

  for (int step = 0; step < steps; ++step) {
    Matrix pre = base + gram * m;
    pre.rowwise() += b0.row(0);
    Matrix d1;  // gradient w.r.t. the first layer's pre-activation
    if (spec.layers == 1) {
      d1 = (tape::softmax(pre) - y) * inv_n;
    } else {
      Matrix& w1 = theta.weights[1];
      Matrix& b1 = theta.biases[1];
      const Matrix h = pre.cwiseMax(0.0);
      const Matrix z2 = spec.arch == Arch::gcn ? Matrix(norm_adj * h) : h;
      Matrix logits = z2 * w1;
      logits.rowwise() += b1.row(0);
      const Matrix delta = (tape::softmax(logits) - y) * inv_n;
      Matrix dh = delta * w1.transpose();
      if (spec.arch == Arch::gcn) dh = norm_adj.transpose() * dh;
      d1 = (pre.array() > 0.0).select(dh, 0.0);
      w1 -= lr * (z2.transpose() * delta);
      b1 -= lr * delta.colwise().sum();
    }
    m -= lr * d1;
    b0 -= lr * d1.colwise().sum();
  }
  theta.weights[0] += f.transpose() * m;
  return theta;
}

// --- driver -------------------------------------------------------------------

Matrix structure(const CondensedGraph& cond) {
  if (cond.variant != Variant::gcond) return Matrix::Identity(cond.nodes(), cond.nodes());
  return gphi_forward(cond.phi, cond.features);
}

CondenseResult condense(const SparseGraph& graph, const CondenseConfig& config, Variant variant,
                        const ProgressFn& progress) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  if (variant == Variant::gcond) {
    require(config.tau2 >= 1, ErrorCode::config, "condense: gcond needs tau2 >= 1");
  }
  CondenseResult result;
  result.requested_nodes = config.resolve_nodes(graph.num_nodes());
  CondensedGraph cond = init_condensed(graph, config, variant);
  const int classes = cond.num_classes;

  ModelSpec spec = config.model;
  spec.dropout = 0.0;
  spec.weight_decay = 0.0;
  Adam adam_feat(config.lr_feat);
  Adam adam_phi(config.lr_phi);
  std::mt19937_64 rng(derive_seed(config.seed, kStreamSampling));
  const int cycle = config.tau1 + config.tau2;

  for (int k = 0; k < config.outer; ++k) {
    ModelParams theta = init_params(spec, graph.feature_dim(), classes,
                                    derive_seed(config.seed, kStreamTheta, static_cast<std::uint64_t>(k)));
    for (int it = 0; it < config.inner; ++it) {
      const std::vector<ClassTarget> targets = sample_targets(graph, cond, config, theta, rng);
      MatchingResult m = matching_loss(cond, spec, theta, targets, true, config.execution);
      if (!std::isfinite(m.loss)) {
        fail(ErrorCode::diverged, "condense: non-finite matching loss at iteration " +
                                      std::to_string(k * config.inner + it) + " (outer " +
                                      std::to_string(k) + ", inner " + std::to_string(it) + ")");
      }
      result.loss_trace.push_back(m.loss);
      if (progress) progress(k, it, m.loss);

      bool update_phi = false;
      bool update_feat = true;
      if (variant == Variant::gcond) {
        if (config.schedule == Schedule::joint) {
          update_phi = true;
        } else {
          update_phi = it % cycle < config.tau1;
          update_feat = !update_phi;
        }
      }
      if (update_phi) {
        std::vector<Matrix*> ps = cond.phi.tensors();
        adam_phi.step(ps, m.grad_phi);
      }
      if (update_feat) {
        Matrix* px = &cond.features;
        adam_feat.step(std::span<Matrix* const>(&px, 1), std::span<const Matrix>(&m.grad_features, 1));
      }

      const Matrix norm_adj = variant == Variant::gcond
                                  ? normalize_sym_dense(structure(cond))
                                  : Matrix(Matrix::Identity(cond.nodes(), cond.nodes()));
      theta = refresh_theta(spec, std::move(theta), norm_adj, cond.features, cond.labels,
                            config.tau_theta, config.lr_theta);
    }
  }
  result.graph = finalize(std::move(cond), config.delta);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

CondensedGraph finalize(CondensedGraph cond) {
  const double delta = cond.delta;
  return finalize(std::move(cond), delta);
}

CondensedGraph finalize(CondensedGraph cond, double delta) {
  require(delta >= 0.0, ErrorCode::validation, "finalize: negative delta");
  Matrix a = structure(cond);
  if (cond.variant == Variant::gcond) {
    a = (a.array() > delta).select(a, 0.0);
  }
  cond.delta = delta;
  cond.adjacency = std::move(a);
  return cond;
}

}  // namespace gcond
