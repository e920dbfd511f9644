#pragma once

// Text formats for datasets, condensed artifacts and run reports.
//
// Dataset directory:
//   manifest.json  name, n, d, classes, directed, edges, train, val, test
//   edges.tsv      "u<TAB>v" per line, 0-indexed, undirected edges listed once
//   features.csv   one comma-separated row per node
//   labels.txt     one integer per node, -1 for unlabeled
//   splits.txt     three lines of whitespace-separated indices: train, val, test
//
// Condensed artifact directory:
//   manifest.json  method, seed, delta, nodes, d, classes, config echo
//   features.csv, adjacency.csv (dense N' x N'), labels.txt

#include "gcond/condense.hpp"
#include "gcond/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace gcond {

struct Dataset {
  std::string name;
  SparseGraph graph;
};

/// Errors: missing_file, parse, count_mismatch, out_of_range (with file:line).
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const SparseGraph& graph,
                  const std::string& name);

/// Flat key/value echo of a condensation configuration.
std::map<std::string, std::string> config_echo(const CondenseConfig& config);

/// Writes a finalized condensed graph with 17 significant digits per value.
void save_condensed(const std::filesystem::path& dir, const CondensedGraph& cond,
                    const std::map<std::string, std::string>& echo = {},
                    std::uint64_t seed = 0);
/// Reads an artifact back; the generator parameters are not stored.
/// An adjacency asymmetric beyond 1e-12 is a validation error.
CondensedGraph load_condensed(const std::filesystem::path& dir);

struct SyntheticSpec {
  Index n = 100;
  int classes = 2;
  double p_in = 0.3;
  double p_out = 0.02;
  Index d = 8;
  std::uint64_t seed = 0;
  double signal = 1.0;  // scale of the one-hot class mean
  double noise = 0.5;   // std of the Gaussian feature noise
  double train_frac = 0.5;
  double val_frac = 0.25;
};

/// Stochastic block model with class-mean-plus-noise features. Node i belongs
/// to class i mod classes; splits are stratified per class.
SparseGraph gen_synthetic(const SyntheticSpec& spec);

/// Writes text to a file, creating parent directories.
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace gcond
