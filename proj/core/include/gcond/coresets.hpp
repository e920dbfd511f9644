#pragma once

// Selection baselines: reduced graphs made of real train nodes.

#include "gcond/graph.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gcond {

enum class SelectMethod { random, herding, kcenter };

std::string_view to_string(SelectMethod m) noexcept;
/// Accepts random, herding, kcenter.
SelectMethod parse_select_method(std::string_view name);

struct Selection {
  std::vector<Index> node_ids;  // grouped by class, in pick order within a class
  SelectMethod method = SelectMethod::random;
  std::vector<Index> counts;    // per class
};

/// Candidates are the nodes in `candidates` with a label in [0, counts.size()).
/// Throws a validation error when a class has fewer candidates than requested.
Selection select_random(std::span<const int> labels, std::span<const Index> candidates,
                        std::span<const Index> counts, std::uint64_t seed);
/// Herding in raw feature space; ties go to the lowest node id.
Selection select_herding(const Matrix& features, std::span<const int> labels,
                         std::span<const Index> candidates, std::span<const Index> counts);
/// Greedy farthest-first from the point nearest the class mean; ties go to the lowest node id.
Selection select_kcenter(const Matrix& features, std::span<const int> labels,
                         std::span<const Index> candidates, std::span<const Index> counts);

/// Runs `method` over the train split.
Selection select(const SparseGraph& graph, SelectMethod method, std::span<const Index> counts,
                 std::uint64_t seed = 0);

/// Largest distance from a point of `points` to its nearest point of `centers` (row indices).
double covering_radius(const Matrix& features, std::span<const Index> points,
                       std::span<const Index> centers);

}  // namespace gcond
