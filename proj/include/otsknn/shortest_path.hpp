#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

namespace otsknn {

/// Undirected graph with non-negative edge weights.
template <typename Weight = double>
class WeightedGraph {
 public:
  explicit WeightedGraph(std::size_t nodes) : adj_(nodes) {}

  void add_edge(std::size_t a, std::size_t b, Weight w) {
    adj_[a].emplace_back(b, w);
    adj_[b].emplace_back(a, w);
  }

  std::size_t size() const { return adj_.size(); }

  static constexpr Weight unreachable() { return std::numeric_limits<Weight>::infinity(); }

  /// Dijkstra from `source`; unreachable nodes get unreachable().
  std::vector<Weight> distances_from(std::size_t source) const {
    std::vector<Weight> dist(adj_.size(), unreachable());
    using Item = std::pair<Weight, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    dist[source] = Weight{};
    q.emplace(Weight{}, source);
    while (!q.empty()) {
      auto [d, u] = q.top();
      q.pop();
      if (d > dist[u]) continue;
      for (auto [v, w] : adj_[u]) {
        const Weight nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          q.emplace(nd, v);
        }
      }
    }
    return dist;
  }

  bool connected() const {
    if (adj_.empty()) return true;
    for (auto d : distances_from(0))
      if (d == unreachable()) return false;
    return true;
  }

 private:
  std::vector<std::vector<std::pair<std::size_t, Weight>>> adj_;
};

}  // namespace otsknn
