#include "gcond/coresets.hpp"

#include "gcond/error.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace gcond {

std::string_view to_string(SelectMethod m) noexcept {
  switch (m) {
    case SelectMethod::random: return "random";
    case SelectMethod::herding: return "herding";
    case SelectMethod::kcenter: return "kcenter";
  }
  return "?";
}

SelectMethod parse_select_method(std::string_view name) {
  for (SelectMethod m : {SelectMethod::random, SelectMethod::herding, SelectMethod::kcenter}) {
    if (name == to_string(m)) return m;
  }
  fail(ErrorCode::config, "unknown selection method '" + std::string(name) + "'");
}

namespace {

// Candidates per class, ascending and deduplicated.
std::vector<std::vector<Index>> group(std::span<const int> labels, std::span<const Index> candidates,
                                      std::span<const Index> counts) {
  std::vector<std::vector<Index>> out(counts.size());
  for (Index v : candidates) {
    require(v >= 0 && static_cast<std::size_t>(v) < labels.size(), ErrorCode::out_of_range,
            "select: candidate " + std::to_string(v) + " outside label range");
    const int c = labels[static_cast<std::size_t>(v)];
    if (c >= 0 && static_cast<std::size_t>(c) < counts.size()) out[static_cast<std::size_t>(c)].push_back(v);
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto& ids = out[c];
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    require(counts[c] >= 0, ErrorCode::validation, "select: negative count for class " + std::to_string(c));
    require(counts[c] == 0 || !ids.empty(), ErrorCode::validation,
            "select: class " + std::to_string(c) + " has no candidates");
    require(static_cast<std::size_t>(counts[c]) <= ids.size(), ErrorCode::validation,
            "select: class " + std::to_string(c) + " has " + std::to_string(ids.size()) +
                " candidates, " + std::to_string(counts[c]) + " requested");
  }
  return out;
}

Selection make(SelectMethod m, std::span<const Index> counts) {
  Selection s;
  s.method = m;
  s.counts.assign(counts.begin(), counts.end());
  return s;
}

Eigen::RowVectorXd mean_of(const Matrix& x, const std::vector<Index>& ids) {
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(x.cols());
  for (Index v : ids) mu += x.row(v);
  return mu / static_cast<double>(ids.size());
}

}  // namespace

Selection select_random(std::span<const int> labels, std::span<const Index> candidates,
                        std::span<const Index> counts, std::uint64_t seed) {
  const auto groups = group(labels, candidates, counts);
  Selection s = make(SelectMethod::random, counts);
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::vector<Index> ids = groups[c];
    std::shuffle(ids.begin(), ids.end(), rng);
    s.node_ids.insert(s.node_ids.end(), ids.begin(), ids.begin() + counts[c]);
  }
  return s;
}

Selection select_herding(const Matrix& features, std::span<const int> labels,
                         std::span<const Index> candidates, std::span<const Index> counts) {
  const auto groups = group(labels, candidates, counts);
  Selection s = make(SelectMethod::herding, counts);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& ids = groups[c];
    if (counts[c] == 0) continue;
    const Eigen::RowVectorXd mu = mean_of(features, ids);
    Eigen::RowVectorXd chosen_sum = Eigen::RowVectorXd::Zero(features.cols());
    std::vector<bool> used(ids.size(), false);
    for (Index t = 1; t <= counts[c]; ++t) {
      std::size_t best = ids.size();
      double best_err = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (used[i]) continue;
        const double err =
            (mu - (chosen_sum + features.row(ids[i])) / static_cast<double>(t)).squaredNorm();
        if (err < best_err) {
          best_err = err;
          best = i;
        }
      }
      used[best] = true;
      chosen_sum += features.row(ids[best]);
      s.node_ids.push_back(ids[best]);
    }
  }
  return s;
}

Selection select_kcenter(const Matrix& features, std::span<const int> labels,
                         std::span<const Index> candidates, std::span<const Index> counts) {
  const auto groups = group(labels, candidates, counts);
  Selection s = make(SelectMethod::kcenter, counts);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& ids = groups[c];
    if (counts[c] == 0) continue;
    const Eigen::RowVectorXd mu = mean_of(features, ids);
    std::size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double d = (features.row(ids[i]) - mu).squaredNorm();
      if (d < best) {
        best = d;
        first = i;
      }
    }
    std::vector<double> nearest(ids.size(), std::numeric_limits<double>::infinity());
    std::vector<bool> used(ids.size(), false);
    std::size_t pick = first;
    for (Index k = 0; k < counts[c]; ++k) {
      used[pick] = true;
      s.node_ids.push_back(ids[pick]);
      std::size_t next = ids.size();
      double far = -1.0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        nearest[i] = std::min(nearest[i], (features.row(ids[i]) - features.row(ids[pick])).squaredNorm());
        if (!used[i] && nearest[i] > far) {
          far = nearest[i];
          next = i;
        }
      }
      pick = next;
    }
  }
  return s;
}

Selection select(const SparseGraph& graph, SelectMethod method, std::span<const Index> counts,
                 std::uint64_t seed) {
  require(counts.size() == static_cast<std::size_t>(graph.num_classes), ErrorCode::dimension,
          "select: one count per class required");
  switch (method) {
    case SelectMethod::random: return select_random(graph.labels, graph.train, counts, seed);
    case SelectMethod::herding: return select_herding(graph.features, graph.labels, graph.train, counts);
    case SelectMethod::kcenter: return select_kcenter(graph.features, graph.labels, graph.train, counts);
  }
  fail(ErrorCode::config, "select: unknown method");
}

double covering_radius(const Matrix& features, std::span<const Index> points,
                       std::span<const Index> centers) {
  require(!centers.empty(), ErrorCode::validation, "covering_radius: no centers");
  double radius = 0.0;
  for (Index p : points) {
    double d = std::numeric_limits<double>::infinity();
    for (Index q : centers) d = std::min(d, (features.row(p) - features.row(q)).norm());
    radius = std::max(radius, d);
  }
  return radius;
}

}  // namespace gcond
