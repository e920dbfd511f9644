#pragma once

// Dense matrices with a reverse-mode differentiation tape.
//
// A Tape owns every value it records. Var is a cheap handle (tape pointer +
// node index); it stays valid for the lifetime of the tape. Nodes are kept in
// recording order, so backward() is a single reverse sweep.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gcond {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace gcond

namespace gcond::tape {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the adjoint of the node's output and pushes contributions into
  /// its inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Matrix value);
  /// Leaf without gradient.
  Var constant(Matrix value);
  /// Records an op. The backward closure is dropped when requires_grad is false.
  Var record(Matrix value, bool requires_grad, BackwardFn backward);

  /// Reverse sweep from a 1x1 node with seed adjoint 1.
  void backward(Var root);
  /// Reverse sweep with an explicit seed (same shape as root).
  void backward(Var root, const Matrix& seed);

  /// Accumulated adjoint, or zeros when the sweep never reached v.
  Matrix grad(Var v) const;

  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  const Matrix& value(Var v) const { return nodes_[v.id_].value; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Drops all recorded nodes; outstanding Vars become dangling.
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }
inline bool Var::requires_grad() const { return tape_->requires_grad(*this); }

// --- primitives ------------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Hadamard product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);

enum class Elementwise { add, sub, mul, relu, sigmoid, scale };
/// Dispatch form of the pointwise primitives; `b` is ignored by unary ops and
/// `s` is used only by scale.
Var elementwise(Elementwise op, Var a, Var b = {}, double s = 1.0);

/// a (n x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
Var transpose(Var a);
/// 1x1 sum of all entries.
Var sum(Var a);
/// 1 x c column sums.
Var column_sums(Var a);
/// Multiply by a constant matrix of the same shape (no gradient to `mask`).
Var mul_const(Var a, const Matrix& mask);
Var gather_rows(Var a, std::span<const Index> rows);
Var row_block(Var a, Index start, Index count);
Var concat_cols(Var a, Var b);
/// Row-major reinterpretation.
Var reshape(Var a, Index rows, Index cols);
/// Row i*m+j of the (n*m x h) result is u_i + v_j.
Var pair_sum(Var u, Var v);
Var softmax_rows(Var a);
/// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);
/// Inverted dropout with a mask drawn from `seed`; identity when rate == 0.
Var dropout(Var a, double rate, std::uint64_t seed);

/// Row-wise softmax of a plain matrix.
Matrix softmax(const Matrix& logits);
/// One-hot rows for labels in [0, classes).
Matrix one_hot(std::span<const int> labels, Index classes);

// --- finite-difference oracle ---------------------------------------------

using ScalarFn = std::function<Var(Tape&, Var)>;

/// Max over entries of |analytic - central difference| / max(1, |analytic|).
double grad_check(const ScalarFn& f, const Matrix& x, double h = 1e-5);

/// Central-difference gradient of a plain scalar function.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double h = 1e-5);

}  // namespace gcond::tape
