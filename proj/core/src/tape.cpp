#include "gcond/tape.hpp"

#include "gcond/error.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace gcond {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::validation: return "validation";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::capability: return "capability";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::diverged: return "diverged";
    case ErrorCode::config: return "config";
    case ErrorCode::missing_file: return "missing-file";
    case ErrorCode::count_mismatch: return "count-mismatch";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

}  // namespace gcond

namespace gcond::tape {
namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void same_tape(Var a, Var b, const char* op) {
  require(a.valid() && b.valid(), ErrorCode::validation, std::string(op) + ": invalid operand");
  require(a.tape() == b.tape(), ErrorCode::validation,
          std::string(op) + ": operands recorded on different tapes");
}

void same_shape(Var a, Var b, const char* op) {
  same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::dimension,
         std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " + shape(b.value()));
  }
}

}  // namespace

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, bool requires_grad, BackwardFn backward) {
  Node n{std::move(value), {}, requires_grad, false, {}};
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var root) {
  require(root.rows() == 1 && root.cols() == 1, ErrorCode::dimension,
          "backward: root must be 1x1, got " + shape(root.value()));
  backward(root, Matrix::Ones(1, 1));
}

void Tape::backward(Var root, const Matrix& seed) {
  require(root.tape() == this, ErrorCode::validation, "backward: root belongs to another tape");
  require(seed.rows() == root.rows() && seed.cols() == root.cols(), ErrorCode::dimension,
          "backward: seed shape mismatch");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root, seed);
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

// --- primitives ------------------------------------------------------------

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    fail(ErrorCode::dimension,
         "matmul: " + shape(a.value()) + " * " + shape(b.value()));
  }
  Matrix out;
  out.noalias() = a.value() * b.value();
  Tape& t = *a.tape();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& t, const Matrix& g) {
                    if (t.requires_grad(a)) {
                      Matrix ga;
                      ga.noalias() = g * t.value(b).transpose();
                      t.accumulate(a, ga);
                    }
                    if (t.requires_grad(b)) {
                      Matrix gb;
                      gb.noalias() = t.value(a).transpose() * g;
                      t.accumulate(b, gb);
                    }
                  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    t.accumulate(b, g);
                  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    t.accumulate(b, -g);
                  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& t, const Matrix& g) {
                    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
                    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
                  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  return t.record(a.value() * s, a.requires_grad(),
                  [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(0.0), a.requires_grad(), [a](Tape& t, const Matrix& g) {
    // Subgradient 0 at exactly 0.
    t.accumulate(a, (t.value(a).array() > 0.0).select(g, 0.0));
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  auto logistic = [](const Matrix& x) -> Matrix {
    return (1.0 + (-x.array()).exp()).inverse().matrix();
  };
  return t.record(logistic(a.value()), a.requires_grad(), [a, logistic](Tape& t, const Matrix& g) {
    Matrix s = logistic(t.value(a));
    t.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var elementwise(Elementwise op, Var a, Var b, double s) {
  switch (op) {
    case Elementwise::add: return add(a, b);
    case Elementwise::sub: return sub(a, b);
    case Elementwise::mul: return mul(a, b);
    case Elementwise::relu: return relu(a);
    case Elementwise::sigmoid: return sigmoid(a);
    case Elementwise::scale: return scale(a, s);
  }
  fail(ErrorCode::validation, "elementwise: unknown op");
}

Var add_row(Var a, Var row) {
  same_tape(a, row, "add_row");
  require(row.rows() == 1 && row.cols() == a.cols(), ErrorCode::dimension,
          "add_row: " + shape(a.value()) + " + " + shape(row.value()));
  Tape& t = *a.tape();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), a.requires_grad() || row.requires_grad(),
                  [a, row](Tape& t, const Matrix& g) {
                    t.accumulate(a, g);
                    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
                  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().transpose(), a.requires_grad(),
                  [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

Var column_sums(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value().colwise().sum();
  return t.record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
    Matrix ga = g.replicate(t.value(a).rows(), 1);
    t.accumulate(a, ga);
  });
}

Var mul_const(Var a, const Matrix& mask) {
  require(mask.rows() == a.rows() && mask.cols() == a.cols(), ErrorCode::dimension,
          "mul_const: " + shape(a.value()) + " vs " + shape(mask));
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(mask), a.requires_grad(),
                  [a, mask](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(mask)); });
}

Var gather_rows(Var a, std::span<const Index> rows) {
  const Matrix& v = a.value();
  Matrix out(static_cast<Index>(rows.size()), v.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < v.rows(), ErrorCode::dimension,
            "gather_rows: row index out of range");
    out.row(static_cast<Index>(i)) = v.row(rows[i]);
  }
  Tape& t = *a.tape();
  std::vector<Index> idx(rows.begin(), rows.end());
  return t.record(std::move(out), a.requires_grad(), [a, idx](Tape& t, const Matrix& g) {
    Matrix ga = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Index>(i));
    t.accumulate(a, ga);
  });
}

Var row_block(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), ErrorCode::dimension,
          "row_block: range outside " + shape(a.value()));
  Tape& t = *a.tape();
  Matrix out = a.value().middleRows(start, count);
  return t.record(std::move(out), a.requires_grad(), [a, start, count](Tape& t, const Matrix& g) {
    Matrix ga = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    ga.middleRows(start, count) = g;
    t.accumulate(a, ga);
  });
}

Var concat_cols(Var a, Var b) {
  same_tape(a, b, "concat_cols");
  require(a.rows() == b.rows(), ErrorCode::dimension,
          "concat_cols: " + shape(a.value()) + " | " + shape(b.value()));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Index split = a.cols();
  Tape& t = *a.tape();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b, split](Tape& t, const Matrix& g) {
                    t.accumulate(a, g.leftCols(split));
                    t.accumulate(b, g.rightCols(g.cols() - split));
                  });
}

Var reshape(Var a, Index rows, Index cols) {
  require(rows * cols == a.rows() * a.cols(), ErrorCode::dimension,
          "reshape: cannot view " + shape(a.value()) + " as " + std::to_string(rows) + "x" +
              std::to_string(cols));
  Tape& t = *a.tape();
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return t.record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
    const Matrix& v = t.value(a);
    t.accumulate(a, Eigen::Map<const Matrix>(g.data(), v.rows(), v.cols()));
  });
}

Var pair_sum(Var u, Var v) {
  same_tape(u, v, "pair_sum");
  require(u.cols() == v.cols(), ErrorCode::dimension,
          "pair_sum: " + shape(u.value()) + " vs " + shape(v.value()));
  const Index n = u.rows();
  const Index m = v.rows();
  Matrix out(n * m, u.cols());
  for (Index i = 0; i < n; ++i) {
    out.middleRows(i * m, m) = v.value().rowwise() + u.value().row(i);
  }
  Tape& t = *u.tape();
  return t.record(std::move(out), u.requires_grad() || v.requires_grad(),
                  [u, v, n, m](Tape& t, const Matrix& g) {
                    Matrix gu(n, g.cols());
                    Matrix gv = Matrix::Zero(m, g.cols());
                    for (Index i = 0; i < n; ++i) {
                      auto block = g.middleRows(i * m, m);
                      gu.row(i) = block.colwise().sum();
                      gv += block;
                    }
                    t.accumulate(u, gu);
                    t.accumulate(v, gv);
                  });
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Matrix one_hot(std::span<const int> labels, Index classes) {
  Matrix out = Matrix::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, ErrorCode::out_of_range,
            "one_hot: label " + std::to_string(labels[i]) + " outside [0," +
                std::to_string(classes) + ")");
    out(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return out;
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  return t.record(softmax(a.value()), a.requires_grad(), [a](Tape& t, const Matrix& g) {
    Matrix s = softmax(t.value(a));
    Eigen::VectorXd inner = g.cwiseProduct(s).rowwise().sum();
    Matrix ga = s.cwiseProduct((g.colwise() - inner));
    t.accumulate(a, ga);
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Matrix& z = logits.value();
  require(static_cast<Index>(labels.size()) == z.rows(), ErrorCode::dimension,
          "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
              shape(z) + " logits");
  require(z.rows() > 0, ErrorCode::validation, "softmax_cross_entropy: empty batch");
  Matrix target = one_hot(labels, z.cols());
  double loss = 0.0;
  for (Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    const double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
    loss += lse - z(r, labels[static_cast<std::size_t>(r)]);
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(z.rows());
  Tape& t = *logits.tape();
  return t.record(std::move(out), logits.requires_grad(),
                  [logits, target](Tape& t, const Matrix& g) {
                    const Matrix& z = t.value(logits);
                    Matrix ga = (softmax(z) - target) * (g(0, 0) / static_cast<double>(z.rows()));
                    t.accumulate(logits, ga);
                  });
}

Var dropout(Var a, double rate, std::uint64_t seed) {
  require(rate >= 0.0 && rate < 1.0, ErrorCode::validation, "dropout: rate outside [0,1)");
  if (rate == 0.0) return a;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return mul_const(a, mask);
}

// --- finite-difference oracle ---------------------------------------------

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    require(std::isfinite(up) && std::isfinite(down), ErrorCode::numeric,
            "numeric_gradient: non-finite function value");
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double grad_check(const ScalarFn& f, const Matrix& x, double h) {
  Matrix analytic;
  {
    Tape t;
    Var xv = t.variable(x);
    Var y = f(t, xv);
    require(std::isfinite(y.value()(0, 0)), ErrorCode::numeric, "grad_check: non-finite value");
    t.backward(y);
    analytic = t.grad(xv);
  }
  require(analytic.allFinite(), ErrorCode::numeric, "grad_check: non-finite gradient");
  auto eval = [&f](const Matrix& p) {
    Tape t;
    return f(t, t.constant(p)).value()(0, 0);
  };
  Matrix numeric = numeric_gradient(eval, x, h);
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double a = analytic.data()[i];
    worst = std::max(worst, std::abs(a - numeric.data()[i]) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

}  // namespace gcond::tape
