#pragma once

#include "gcond/tape.hpp"

#include <memory>
#include <random>
#include <span>
#include <vector>

namespace gcond {

/// Compressed sparse row matrix. Column indices within a row are sorted.
struct CsrMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> values;

  Index nnz() const { return static_cast<Index>(col_idx.size()); }

  /// Throws validation errors for non-monotone row_ptr or out-of-range columns.
  void validate() const;
  Matrix to_dense() const;
  CsrMatrix transposed() const;
  /// True when A_ij == A_ji for every stored entry.
  bool is_symmetric(double tol = 0.0) const;

  /// Keeps entries with |value| > drop_below.
  static CsrMatrix from_dense(const Matrix& dense, double drop_below = 0.0);
  static CsrMatrix identity(Index n);
  /// Builds from (row, col, value) triplets; duplicate coordinates are summed.
  static CsrMatrix from_triplets(Index rows, Index cols, std::span<const Index> r,
                                 std::span<const Index> c, std::span<const double> v);
};

enum class Split { train, val, test };

/// Attributed graph for node classification. Immutable after construction.
struct SparseGraph {
  CsrMatrix adjacency;
  Matrix features;
  std::vector<int> labels;  // -1 marks unlabeled nodes
  int num_classes = 0;
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;

  Index num_nodes() const { return adjacency.rows; }
  Index feature_dim() const { return features.cols(); }
  const std::vector<Index>& split(Split s) const;
  std::vector<bool> mask(Split s) const;
  /// Train-split nodes whose label is `class_id`, ascending.
  std::vector<Index> train_nodes_of(int class_id) const;
  /// Count of train nodes per class.
  std::vector<Index> train_class_counts() const;

  /// Checks CSR validity, symmetry, label range and mask disjointness.
  void validate() const;
};

// --- normalization and propagation -----------------------------------------

/// D^{-1/2} (A [+ I]) D^{-1/2}. Zero-degree rows stay zero.
CsrMatrix normalize_sym(const CsrMatrix& adj, bool add_self_loops);
/// D^{-1} A without self loops (neighbor mean). Zero-degree rows stay zero.
CsrMatrix normalize_mean(const CsrMatrix& adj);

/// Sparse times dense.
Matrix spmm(const CsrMatrix& a, const Matrix& dense);
/// Sparse-transpose times dense, without materializing the transpose.
Matrix spmm_transposed(const CsrMatrix& a, const Matrix& dense);
/// Differentiable with respect to `dense`; adjoint is A^T g. The tape keeps a
/// reference to `a` until the backward sweep, so `a` must outlive it.
tape::Var spmm(const CsrMatrix& a, tape::Var dense);
/// As above, sharing ownership of `a` with the tape.
tape::Var spmm(std::shared_ptr<const CsrMatrix> a, tape::Var dense);
/// A^T times dense, differentiable with respect to `dense`.
tape::Var spmm_transposed(std::shared_ptr<const CsrMatrix> a, tape::Var dense);

/// Dense, differentiable D^{-1/2}(A + I)D^{-1/2}.
tape::Var normalize_sym_dense(tape::Var adj);
/// Dense D^{-1/2}(A + I)D^{-1/2}; zero-degree rows stay zero.
Matrix normalize_sym_dense(const Matrix& adj);

// --- sampling ------------------------------------------------------------

struct ClassBatch {
  int class_id = 0;
  std::vector<Index> nodes;    // sampled train nodes of class_id
  std::vector<Index> closure;  // nodes first, then sampled neighbors in discovery order
};

/// Uniformly samples up to batch_size train nodes of class_id, then expands
/// `hops` times by sampling at most `fanout` neighbors of every frontier node.
ClassBatch sample_class_batch(const SparseGraph& graph, int class_id, Index batch_size,
                              Index fanout, int hops, std::mt19937_64& rng);

/// Subgraph on node_ids (in that order). Split lists are restricted to the
/// selected nodes and reindexed.
SparseGraph induced_subgraph(const SparseGraph& graph, std::span<const Index> node_ids);

// --- statistics ----------------------------------------------------------

struct GraphStats {
  Index nodes = 0;
  Index edges = 0;           // undirected, off-diagonal, weight >= threshold
  double sparsity = 0.0;     // percent of ordered node pairs that are edges
  double homophily = 0.0;    // fraction of retained edges joining equal labels
  double storage_bytes = 0;  // 4-byte feature floats + 8 bytes per stored edge entry

  double storage_mb() const { return storage_bytes / (1024.0 * 1024.0); }
};

GraphStats graph_stats(const CsrMatrix& adj, std::span<const int> labels, Index feature_dim,
                       double binarize_at = 0.5);

}  // namespace gcond
