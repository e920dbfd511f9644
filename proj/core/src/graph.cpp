#include "gcond/graph.hpp"

#include "gcond/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace gcond {

// --- CsrMatrix ---------------------------------------------------------------

void CsrMatrix::validate() const {
  require(rows >= 0 && cols >= 0, ErrorCode::validation, "csr: negative shape");
  require(static_cast<Index>(row_ptr.size()) == rows + 1, ErrorCode::validation,
          "csr: row_ptr length must be rows+1");
  require(row_ptr.front() == 0, ErrorCode::validation, "csr: row_ptr[0] must be 0");
  for (Index r = 0; r < rows; ++r) {
    require(row_ptr[r] <= row_ptr[r + 1], ErrorCode::validation,
            "csr: row_ptr not monotone at row " + std::to_string(r));
  }
  require(row_ptr.back() == nnz() && values.size() == col_idx.size(), ErrorCode::validation,
          "csr: row_ptr/col_idx/values lengths disagree");
  for (Index c : col_idx) {
    require(c >= 0 && c < cols, ErrorCode::validation,
            "csr: column index " + std::to_string(c) + " out of range");
  }
}

Matrix CsrMatrix::to_dense() const {
  Matrix out = Matrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out(r, col_idx[k]) += values[k];
  }
  return out;
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (Index c : col_idx) ++t.row_ptr[c + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col_idx.resize(col_idx.size());
  t.values.resize(values.size());
  std::vector<Index> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (Index r = 0; r < rows; ++r) {
    for (Index k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const Index dst = cursor[col_idx[k]]++;
      t.col_idx[dst] = r;
      t.values[dst] = values[k];
    }
  }
  return t;
}

bool CsrMatrix::is_symmetric(double tol) const {
  if (rows != cols) return false;
  CsrMatrix t = transposed();
  if (t.nnz() != nnz()) return false;
  for (std::size_t k = 0; k < col_idx.size(); ++k) {
    if (t.col_idx[k] != col_idx[k] || std::abs(t.values[k] - values[k]) > tol) return false;
  }
  return t.row_ptr == row_ptr;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& dense, double drop_below) {
  CsrMatrix m;
  m.rows = dense.rows();
  m.cols = dense.cols();
  m.row_ptr.reserve(static_cast<std::size_t>(m.rows) + 1);
  for (Index r = 0; r < m.rows; ++r) {
    for (Index c = 0; c < m.cols; ++c) {
      const double v = dense(r, c);
      if (std::abs(v) > drop_below) {
        m.col_idx.push_back(c);
        m.values.push_back(v);
      }
    }
    m.row_ptr.push_back(m.nnz());
  }
  return m;
}

CsrMatrix CsrMatrix::identity(Index n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(static_cast<std::size_t>(n) + 1);
  std::iota(m.row_ptr.begin(), m.row_ptr.end(), Index{0});
  m.col_idx.resize(static_cast<std::size_t>(n));
  std::iota(m.col_idx.begin(), m.col_idx.end(), Index{0});
  m.values.assign(static_cast<std::size_t>(n), 1.0);
  return m;
}

CsrMatrix CsrMatrix::from_triplets(Index rows, Index cols, std::span<const Index> r,
                                   std::span<const Index> c, std::span<const double> v) {
  require(r.size() == c.size() && c.size() == v.size(), ErrorCode::dimension,
          "from_triplets: length mismatch");
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r[a] != r[b] ? r[a] < r[b] : c[a] < c[b];
  });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    require(r[i] >= 0 && r[i] < rows && c[i] >= 0 && c[i] < cols, ErrorCode::out_of_range,
            "from_triplets: index (" + std::to_string(r[i]) + "," + std::to_string(c[i]) +
                ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    if (k > 0 && r[order[k - 1]] == r[i] && c[order[k - 1]] == c[i]) {
      m.values.back() += v[i];
      continue;
    }
    m.col_idx.push_back(c[i]);
    m.values.push_back(v[i]);
    ++m.row_ptr[r[i] + 1];
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

// --- SparseGraph ---------------------------------------------------------------

const std::vector<Index>& SparseGraph::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

std::vector<bool> SparseGraph::mask(Split s) const {
  std::vector<bool> m(static_cast<std::size_t>(num_nodes()), false);
  for (Index i : split(s)) m[static_cast<std::size_t>(i)] = true;
  return m;
}

std::vector<Index> SparseGraph::train_nodes_of(int class_id) const {
  std::vector<Index> out;
  for (Index i : train) {
    if (labels[static_cast<std::size_t>(i)] == class_id) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> SparseGraph::train_class_counts() const {
  std::vector<Index> counts(static_cast<std::size_t>(num_classes), 0);
  for (Index i : train) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y >= 0) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

void SparseGraph::validate() const {
  adjacency.validate();
  require(adjacency.rows == adjacency.cols, ErrorCode::validation, "graph: adjacency not square");
  require(features.rows() == num_nodes(), ErrorCode::count_mismatch,
          "graph: feature rows " + std::to_string(features.rows()) + " != nodes " +
              std::to_string(num_nodes()));
  require(static_cast<Index>(labels.size()) == num_nodes(), ErrorCode::count_mismatch,
          "graph: label count != nodes");
  for (double w : adjacency.values) {
    require(w >= 0.0, ErrorCode::validation, "graph: negative edge weight");
  }
  require(adjacency.is_symmetric(1e-12), ErrorCode::validation, "graph: adjacency not symmetric");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= -1 && labels[i] < num_classes, ErrorCode::out_of_range,
            "graph: label " + std::to_string(labels[i]) + " of node " + std::to_string(i) +
                " outside [-1," + std::to_string(num_classes) + ")");
  }
  std::vector<int> owner(static_cast<std::size_t>(num_nodes()), -1);
  for (int s = 0; s < 3; ++s) {
    for (Index i : split(static_cast<Split>(s))) {
      require(i >= 0 && i < num_nodes(), ErrorCode::out_of_range,
              "graph: split index " + std::to_string(i) + " out of range");
      auto& o = owner[static_cast<std::size_t>(i)];
      require(o == -1, ErrorCode::validation,
              "graph: node " + std::to_string(i) + " appears in more than one split");
      o = s;
    }
  }
  for (Index i : train) {
    require(labels[static_cast<std::size_t>(i)] >= 0, ErrorCode::validation,
            "graph: train node " + std::to_string(i) + " is unlabeled");
  }
}

// --- normalization and propagation -------------------------------------------

CsrMatrix normalize_sym(const CsrMatrix& adj, bool add_self_loops) {
  require(adj.rows == adj.cols, ErrorCode::dimension, "normalize_sym: adjacency not square");
  for (double w : adj.values) {
    require(w >= 0.0, ErrorCode::validation, "normalize_sym: negative edge weight");
  }
  CsrMatrix out;
  out.rows = out.cols = adj.rows;
  out.row_ptr.reserve(static_cast<std::size_t>(adj.rows) + 1);
  for (Index r = 0; r < adj.rows; ++r) {
    bool has_diag = false;
    for (Index k = adj.row_ptr[r]; k < adj.row_ptr[r + 1]; ++k) {
      double v = adj.values[k];
      if (adj.col_idx[k] == r && add_self_loops) {
        v += 1.0;
        has_diag = true;
      }
      if (add_self_loops && !has_diag && adj.col_idx[k] > r) {
        out.col_idx.push_back(r);
        out.values.push_back(1.0);
        has_diag = true;
      }
      out.col_idx.push_back(adj.col_idx[k]);
      out.values.push_back(v);
    }
    if (add_self_loops && !has_diag) {
      out.col_idx.push_back(r);
      out.values.push_back(1.0);
    }
    out.row_ptr.push_back(out.nnz());
  }
  std::vector<double> inv_sqrt(static_cast<std::size_t>(out.rows), 0.0);
  for (Index r = 0; r < out.rows; ++r) {
    double d = 0.0;
    for (Index k = out.row_ptr[r]; k < out.row_ptr[r + 1]; ++k) d += out.values[k];
    inv_sqrt[static_cast<std::size_t>(r)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  for (Index r = 0; r < out.rows; ++r) {
    for (Index k = out.row_ptr[r]; k < out.row_ptr[r + 1]; ++k) {
      out.values[k] *= inv_sqrt[static_cast<std::size_t>(r)] *
                       inv_sqrt[static_cast<std::size_t>(out.col_idx[k])];
    }
  }
  return out;
}

CsrMatrix normalize_mean(const CsrMatrix& adj) {
  CsrMatrix out;
  out.rows = adj.rows;
  out.cols = adj.cols;
  out.row_ptr.reserve(static_cast<std::size_t>(adj.rows) + 1);
  for (Index r = 0; r < adj.rows; ++r) {
    const Index begin = out.nnz();
    double d = 0.0;
    for (Index k = adj.row_ptr[r]; k < adj.row_ptr[r + 1]; ++k) {
      if (adj.col_idx[k] == r) continue;
      out.col_idx.push_back(adj.col_idx[k]);
      out.values.push_back(adj.values[k]);
      d += adj.values[k];
    }
    if (d > 0.0) {
      for (Index k = begin; k < out.nnz(); ++k) out.values[k] /= d;
    }
    out.row_ptr.push_back(out.nnz());
  }
  return out;
}

Matrix spmm(const CsrMatrix& a, const Matrix& dense) {
  require(a.cols == dense.rows(), ErrorCode::dimension,
          "spmm: sparse " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
              " times dense " + std::to_string(dense.rows()) + "x" + std::to_string(dense.cols()));
  Matrix out = Matrix::Zero(a.rows, dense.cols());
  for (Index r = 0; r < a.rows; ++r) {
    auto dst = out.row(r);
    for (Index k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      dst.noalias() += a.values[k] * dense.row(a.col_idx[k]);
    }
  }
  return out;
}

Matrix spmm_transposed(const CsrMatrix& a, const Matrix& dense) {
  require(a.rows == dense.rows(), ErrorCode::dimension, "spmm_transposed: shape mismatch");
  Matrix out = Matrix::Zero(a.cols, dense.cols());
  for (Index r = 0; r < a.rows; ++r) {
    auto src = dense.row(r);
    for (Index k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      out.row(a.col_idx[k]).noalias() += a.values[k] * src;
    }
  }
  return out;
}

tape::Var spmm(const CsrMatrix& a, tape::Var dense) {
  tape::Tape& t = *dense.tape();
  const CsrMatrix* op = &a;
  // The closure keeps a pointer: `a` must outlive the backward sweep.
  return t.record(spmm(a, dense.value()), dense.requires_grad(),
                  [op, dense](tape::Tape& t, const Matrix& g) {
                    t.accumulate(dense, spmm_transposed(*op, g));
                  });
}

tape::Var spmm(std::shared_ptr<const CsrMatrix> a, tape::Var dense) {
  tape::Tape& t = *dense.tape();
  Matrix out = spmm(*a, dense.value());
  return t.record(std::move(out), dense.requires_grad(),
                  [a = std::move(a), dense](tape::Tape& t, const Matrix& g) {
                    t.accumulate(dense, spmm_transposed(*a, g));
                  });
}

tape::Var spmm_transposed(std::shared_ptr<const CsrMatrix> a, tape::Var dense) {
  tape::Tape& t = *dense.tape();
  Matrix out = spmm_transposed(*a, dense.value());
  return t.record(std::move(out), dense.requires_grad(),
                  [a = std::move(a), dense](tape::Tape& t, const Matrix& g) {
                    t.accumulate(dense, spmm(*a, g));
                  });
}

tape::Var normalize_sym_dense(tape::Var adj) {
  require(adj.rows() == adj.cols(), ErrorCode::dimension, "normalize_sym_dense: not square");
  const Index n = adj.rows();
  Matrix b = adj.value();
  b.diagonal().array() += 1.0;
  Eigen::VectorXd deg = b.rowwise().sum();
  Eigen::VectorXd s = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  Matrix out = s.asDiagonal() * b * s.asDiagonal();
  tape::Tape& t = *adj.tape();
  return t.record(std::move(out), adj.requires_grad(),
                  [adj, n](tape::Tape& t, const Matrix& g) {
                    Matrix b = t.value(adj);
                    b.diagonal().array() += 1.0;
                    Eigen::VectorXd deg = b.rowwise().sum();
                    Eigen::VectorXd s = deg.unaryExpr(
                        [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
                    Matrix gb = b.cwiseProduct(g);  // G_ij B_ij
                    // dL/ds_k = sum_j G_kj B_kj s_j + sum_i G_ik B_ik s_i
                    Eigen::VectorXd ds = gb * s + gb.transpose() * s;
                    Eigen::VectorXd dd(n);
                    for (Index k = 0; k < n; ++k) {
                      dd(k) = deg(k) > 0.0 ? -0.5 * ds(k) * s(k) * s(k) * s(k) : 0.0;
                    }
                    Matrix ga = s.asDiagonal() * g * s.asDiagonal();
                    ga.colwise() += dd;
                    t.accumulate(adj, ga);
                  });
}

// --- sampling -----------------------------------------------------------

namespace {

// Uniform sample of k items without replacement via partial Fisher-Yates.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k,
                                          std::mt19937_64& rng) {
  if (k >= pool.size()) return pool;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

ClassBatch sample_class_batch(const SparseGraph& graph, int class_id, Index batch_size,
                              Index fanout, int hops, std::mt19937_64& rng) {
  require(hops >= 0, ErrorCode::validation, "sample_class_batch: negative hop count");
  require(batch_size >= 1 && fanout >= 0, ErrorCode::validation,
          "sample_class_batch: batch_size must be >= 1 and fanout >= 0");
  std::vector<Index> pool = graph.train_nodes_of(class_id);
  require(!pool.empty(), ErrorCode::validation,
          "sample_class_batch: class " + std::to_string(class_id) + " has no train nodes");

  ClassBatch batch;
  batch.class_id = class_id;
  batch.nodes = sample_without_replacement(std::move(pool), static_cast<std::size_t>(batch_size), rng);
  batch.closure = batch.nodes;

  std::unordered_set<Index> seen(batch.nodes.begin(), batch.nodes.end());
  std::vector<Index> frontier = batch.nodes;
  const CsrMatrix& a = graph.adjacency;
  for (int h = 0; h < hops && !frontier.empty(); ++h) {
    std::vector<Index> next;
    for (Index u : frontier) {
      std::vector<Index> nbrs;
      for (Index k = a.row_ptr[u]; k < a.row_ptr[u + 1]; ++k) {
        if (a.col_idx[k] != u) nbrs.push_back(a.col_idx[k]);
      }
      for (Index v : sample_without_replacement(std::move(nbrs), static_cast<std::size_t>(fanout), rng)) {
        if (seen.insert(v).second) {
          batch.closure.push_back(v);
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }
  return batch;
}

SparseGraph induced_subgraph(const SparseGraph& graph, std::span<const Index> node_ids) {
  std::unordered_map<Index, Index> local;
  local.reserve(node_ids.size());
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    const Index v = node_ids[i];
    require(v >= 0 && v < graph.num_nodes(), ErrorCode::out_of_range,
            "induced_subgraph: node " + std::to_string(v) + " out of range");
    require(local.emplace(v, static_cast<Index>(i)).second, ErrorCode::validation,
            "induced_subgraph: duplicate node id " + std::to_string(v));
  }
  const Index n = static_cast<Index>(node_ids.size());
  SparseGraph sub;
  sub.num_classes = graph.num_classes;
  sub.features.resize(n, graph.feature_dim());
  sub.labels.resize(static_cast<std::size_t>(n));
  sub.adjacency.rows = sub.adjacency.cols = n;
  sub.adjacency.row_ptr.assign(1, 0);
  const CsrMatrix& a = graph.adjacency;
  for (Index i = 0; i < n; ++i) {
    const Index v = node_ids[static_cast<std::size_t>(i)];
    sub.features.row(i) = graph.features.row(v);
    sub.labels[static_cast<std::size_t>(i)] = graph.labels[static_cast<std::size_t>(v)];
    std::vector<std::pair<Index, double>> row;
    for (Index k = a.row_ptr[v]; k < a.row_ptr[v + 1]; ++k) {
      auto it = local.find(a.col_idx[k]);
      if (it != local.end()) row.emplace_back(it->second, a.values[k]);
    }
    std::sort(row.begin(), row.end());
    for (auto [c, w] : row) {
      sub.adjacency.col_idx.push_back(c);
      sub.adjacency.values.push_back(w);
    }
    sub.adjacency.row_ptr.push_back(sub.adjacency.nnz());
  }
  auto remap = [&](const std::vector<Index>& ids) {
    std::vector<Index> out;
    for (Index v : ids) {
      auto it = local.find(v);
      if (it != local.end()) out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  sub.train = remap(graph.train);
  sub.val = remap(graph.val);
  sub.test = remap(graph.test);
  return sub;
}

// --- statistics ----------------------------------------------------------

GraphStats graph_stats(const CsrMatrix& adj, std::span<const int> labels, Index feature_dim,
                       double binarize_at) {
  require(static_cast<Index>(labels.size()) == adj.rows, ErrorCode::dimension,
          "graph_stats: label count != nodes");
  GraphStats st;
  st.nodes = adj.rows;
  Index same = 0;
  for (Index r = 0; r < adj.rows; ++r) {
    for (Index k = adj.row_ptr[r]; k < adj.row_ptr[r + 1]; ++k) {
      const Index c = adj.col_idx[k];
      if (c <= r || adj.values[k] < binarize_at) continue;
      ++st.edges;
      if (labels[static_cast<std::size_t>(r)] == labels[static_cast<std::size_t>(c)]) ++same;
    }
  }
  const double pairs = static_cast<double>(st.nodes) * static_cast<double>(st.nodes - 1);
  st.sparsity = pairs > 0.0 ? 100.0 * 2.0 * static_cast<double>(st.edges) / pairs : 0.0;
  st.homophily = st.edges > 0 ? static_cast<double>(same) / static_cast<double>(st.edges) : 0.0;
  st.storage_bytes = 4.0 * static_cast<double>(st.nodes) * static_cast<double>(feature_dim) +
                     8.0 * 2.0 * static_cast<double>(st.edges);
  return st;
}

Matrix normalize_sym_dense(const Matrix& adj) {
  require(adj.rows() == adj.cols(), ErrorCode::dimension, "normalize_sym_dense: adjacency not square");
  Matrix a = adj;
  a.diagonal().array() += 1.0;
  const Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::VectorXd s(deg.size());
  for (Index i = 0; i < deg.size(); ++i) s(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  return s.asDiagonal() * a * s.asDiagonal();
}

}  // namespace gcond
