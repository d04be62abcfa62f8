#pragma once

// Nearest-neighbor strategies over a store of solved instances, plus the
// exact benchmark they are scored against.
//
//   ben        full MILP, spanning shortest-path bounds
//   knn-d      rounded neighbor mean, one LP
//   knn-lp     best neighbor topology, k LPs
//   knn-b      unanimity fixing, spanning bounds
//   knn-m      no fixing, bounds from paths through unanimously-on lines
//   knn-bm     unanimity fixing and updated bounds
//   knn-bhatm  unanimity fixing, historic angle bounds over the whole store
//   all-hatm   historic angle bounds, no fixing

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "otsknn/formulation.hpp"
#include "otsknn/mip.hpp"
#include "otsknn/training.hpp"

namespace otsknn {

enum class Method { Ben, KnnD, KnnLP, KnnB, KnnM, KnnBM, KnnBhatM, AllhatM };

inline constexpr Method kAllMethods[] = {Method::Ben,  Method::KnnD,  Method::KnnLP,    Method::KnnB,
                                         Method::KnnM, Method::KnnBM, Method::KnnBhatM, Method::AllhatM};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Ben: return "ben";
    case Method::KnnD: return "knn-d";
    case Method::KnnLP: return "knn-lp";
    case Method::KnnB: return "knn-b";
    case Method::KnnM: return "knn-m";
    case Method::KnnBM: return "knn-bm";
    case Method::KnnBhatM: return "knn-bhatm";
    case Method::AllhatM: return "all-hatm";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : kAllMethods)
    if (s == to_string(m)) return m;
  return std::nullopt;
}

/// Whether the method consults neighbors (and therefore needs k).
inline bool uses_k(Method m) { return m != Method::Ben && m != Method::AllhatM; }

struct NeighborSet {
  std::vector<std::size_t> indices;
  std::vector<double> distances;
};

/// The k records closest to `demand` in Euclidean distance; ties go to the
/// lower index.
inline NeighborSet nearest_neighbors(std::span<const TrainingRecord> training, std::span<const double> demand, std::size_t k) {
  if (k < 1 || k > training.size())
    throw std::invalid_argument("k must lie in [1, " + std::to_string(training.size()) + "], got " + std::to_string(k));
  std::vector<std::pair<double, std::size_t>> all;
  all.reserve(training.size());
  for (std::size_t t = 0; t < training.size(); ++t) {
    const auto& d = training[t].demand;
    if (d.size() != demand.size()) throw std::invalid_argument("training demand dimension mismatch");
    double s = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) s += (d[n] - demand[n]) * (d[n] - demand[n]);
    all.emplace_back(s, t);
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  NeighborSet out;
  for (std::size_t i = 0; i < k; ++i) {
    out.indices.push_back(all[i].second);
    out.distances.push_back(std::sqrt(all[i].first));
  }
  return out;
}

struct Unanimity {
  std::map<std::size_t, int> fixed;  // switchable position -> agreed value
  std::vector<std::size_t> free;
};

inline Unanimity unanimity_bounds(const std::vector<Statuses>& neighbors) {
  if (neighbors.empty()) throw std::invalid_argument("unanimity_bounds needs at least one neighbor");
  Unanimity u;
  for (std::size_t s = 0; s < neighbors.front().size(); ++s) {
    const auto v = neighbors.front()[s];
    const bool agree = std::all_of(neighbors.begin(), neighbors.end(), [&](const Statuses& x) { return x.at(s) == v; });
    if (agree)
      u.fixed[s] = v;
    else
      u.free.push_back(s);
  }
  return u;
}

inline std::vector<Statuses> neighbor_statuses(std::span<const TrainingRecord> training, const NeighborSet& nb) {
  std::vector<Statuses> out;
  for (auto i : nb.indices) out.push_back(training[i].statuses);
  return out;
}

struct MethodConfig {
  MipConfig mip;  // its lp member also drives the LP-only methods
};

struct MethodOutcome {
  Method method = Method::Ben;
  std::size_t k = 0;
  std::optional<Statuses> statuses;
  Cost cost = Cost::infinite();
  double wall_time = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  std::size_t lp_solves = 0;
  std::size_t fixed_binaries = 0;
  std::optional<MipStatus> mip_status;
  std::optional<BigMBounds> bounds_used;
  std::vector<double> angles;  // empty unless a solution was found
  // Bounds came from paths through lines that are not guaranteed in service.
  bool bound_validity_unproven = false;
};

/// Memo of C(d, x) for one demand vector.  Stores the first solve time so
/// repeated lookups report the same cost of evaluation.
class CostCache {
 public:
  struct Entry {
    Cost cost = Cost::infinite();
    double seconds = 0.0;
    long iterations = 0;
  };

  const Entry& evaluate(const Network& net, std::span<const double> demand, const Statuses& x, const LpConfig& cfg) {
    auto it = entries_.find(x);
    if (it != entries_.end()) return it->second;
    const auto start = std::chrono::steady_clock::now();
    auto sol = solve_lp(build_opf_lp(net, demand, x), cfg);
    Entry e;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    e.iterations = sol.iterations;
    if (sol.status == LpStatus::Optimal)
      e.cost = Cost::of(sol.objective);
    else if (sol.status != LpStatus::Infeasible)
      throw std::runtime_error(std::string("dispatch LP ended with status ") + to_string(sol.status));
    return entries_.emplace(x, e).first->second;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Statuses, Entry> entries_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

inline MethodOutcome solve_model(Method method, std::size_t k, const Network& net, std::span<const double> demand,
                                 const BigMBounds& bounds, const std::map<std::size_t, int>& fixed, const MethodConfig& cfg,
                                 Clock::time_point start) {
  auto model = build_ots_mip(net, demand, bounds, fixed);
  auto sol = solve_mip(model.mip, cfg.mip);
  MethodOutcome out;
  out.method = method;
  out.k = k;
  out.nodes = sol.nodes;
  out.lp_iterations = sol.lp_iterations;
  out.lp_solves = static_cast<std::size_t>(sol.nodes);
  out.fixed_binaries = fixed.size();
  out.mip_status = sol.status;
  out.bounds_used = bounds;
  if (sol.has_incumbent()) {
    auto d = model.dispatch(*sol.incumbent, sol.objective);
    out.statuses = d.statuses;
    out.angles = d.angles;
    out.cost = Cost::of(sol.objective);
  }
  out.wall_time = seconds_since(start);
  return out;
}

inline MethodOutcome single_topology(Method method, std::size_t k, const Network& net, std::span<const double> demand,
                                     const Statuses& x, const LpConfig& cfg) {
  MethodOutcome out;
  out.method = method;
  out.k = k;
  out.statuses = x;
  out.lp_solves = 1;
  out.fixed_binaries = x.size();
  if (auto d = evaluate_dispatch(net, demand, x, cfg)) {
    out.cost = Cost::of(d->cost);
    out.angles = d->angles;
  }
  return out;
}

}  // namespace detail

inline MethodOutcome ben(const Network& net, std::span<const double> demand, const MethodConfig& cfg = {}) {
  const auto start = detail::Clock::now();
  return detail::solve_model(Method::Ben, 0, net, demand, shortest_path_bigm(net), {}, cfg, start);
}

inline MethodOutcome knn_d(std::span<const TrainingRecord> training, const Network& net, std::span<const double> demand,
                           std::size_t k, const MethodConfig& cfg = {}) {
  const auto start = detail::Clock::now();
  auto nb = nearest_neighbors(training, demand, k);
  Statuses x(net.switchable_count(), 0);
  for (std::size_t s = 0; s < x.size(); ++s) {
    std::size_t on = 0;
    for (auto i : nb.indices) on += training[i].statuses.at(s);
    // Mean exactly 1/2 keeps the line in service.
    x[s] = 2 * on >= k ? 1 : 0;
  }
  auto out = detail::single_topology(Method::KnnD, k, net, demand, x, cfg.mip.lp);
  out.wall_time = detail::seconds_since(start);
  return out;
}

/// Best of the k neighbor topologies.  Wall time is the sum of the LP times.
inline MethodOutcome knn_lp(std::span<const TrainingRecord> training, const Network& net, std::span<const double> demand,
                            std::size_t k, const MethodConfig& cfg = {}, CostCache* cache = nullptr) {
  auto nb = nearest_neighbors(training, demand, k);
  CostCache local;
  CostCache& memo = cache ? *cache : local;
  MethodOutcome out;
  out.method = Method::KnnLP;
  out.k = k;
  out.fixed_binaries = net.switchable_count();
  std::optional<std::size_t> best;
  for (auto i : nb.indices) {
    const auto& e = memo.evaluate(net, demand, training[i].statuses, cfg.mip.lp);
    out.wall_time += e.seconds;
    out.lp_iterations += e.iterations;
    ++out.lp_solves;
    // Strict improvement only: equal costs keep the earlier (closer) neighbor.
    if (!best || e.cost < out.cost) {
      best = i;
      out.cost = e.cost;
    }
  }
  out.statuses = training[*best].statuses;
  if (out.cost.is_finite())
    if (auto d = evaluate_dispatch(net, demand, *out.statuses, cfg.mip.lp)) out.angles = d->angles;
  return out;
}

enum class FamilyVariant { B, M, BM };

/// Shortest-path bounds with the lines in `closed` added to the base graph.
/// Free lines inside `closed` are bounded through the others.
inline BigMBounds updated_bigm(const Network& net, const std::set<std::size_t>& closed, const std::set<std::size_t>& free_closed) {
  auto bounds = shortest_path_bigm(net, closed);
  for (auto s : free_closed) {
    auto without = closed;
    without.erase(s);
    bounds.set(s, shortest_path_bigm(net, without).at(s));
  }
  return bounds;
}

inline MethodOutcome knn_family(std::span<const TrainingRecord> training, const Network& net, std::span<const double> demand,
                                std::size_t k, FamilyVariant variant, const MethodConfig& cfg = {}) {
  const auto start = detail::Clock::now();
  auto nb = nearest_neighbors(training, demand, k);
  auto u = unanimity_bounds(neighbor_statuses(training, nb));
  std::set<std::size_t> on;
  for (auto [s, v] : u.fixed)
    if (v == 1) on.insert(s);

  const Method method = variant == FamilyVariant::B ? Method::KnnB : variant == FamilyVariant::M ? Method::KnnM : Method::KnnBM;
  std::map<std::size_t, int> fixed;
  if (variant != FamilyVariant::M) fixed = u.fixed;
  BigMBounds bounds;
  if (variant == FamilyVariant::B)
    bounds = shortest_path_bigm(net);
  else
    bounds = updated_bigm(net, on, variant == FamilyVariant::M ? on : std::set<std::size_t>{});
  auto out = detail::solve_model(method, k, net, demand, bounds, fixed, cfg, start);
  out.bound_validity_unproven = variant != FamilyVariant::B && !on.empty();
  return out;
}

inline MethodOutcome knn_bhatm(std::span<const TrainingRecord> training, const Network& net, std::span<const double> demand,
                               std::size_t k, const MethodConfig& cfg = {}) {
  const auto start = detail::Clock::now();
  auto nb = nearest_neighbors(training, demand, k);
  auto u = unanimity_bounds(neighbor_statuses(training, nb));
  auto bounds = historic_angle_bigm(training, net, shortest_path_bigm(net));
  auto out = detail::solve_model(Method::KnnBhatM, k, net, demand, bounds, u.fixed, cfg, start);
  out.bound_validity_unproven = true;
  return out;
}

inline MethodOutcome all_hatm(std::span<const TrainingRecord> training, const Network& net, std::span<const double> demand,
                              const MethodConfig& cfg = {}) {
  const auto start = detail::Clock::now();
  if (training.empty()) throw std::invalid_argument("all-hatm needs a non-empty training set");
  auto bounds = historic_angle_bigm(training, net, shortest_path_bigm(net));
  auto out = detail::solve_model(Method::AllhatM, 0, net, demand, bounds, {}, cfg, start);
  out.bound_validity_unproven = true;
  return out;
}

/// Dispatches on `method`; `k` is ignored by ben and all-hatm.
inline MethodOutcome run_method(Method method, std::span<const TrainingRecord> training, const Network& net,
                                std::span<const double> demand, std::size_t k, const MethodConfig& cfg = {},
                                CostCache* cache = nullptr) {
  switch (method) {
    case Method::Ben: return ben(net, demand, cfg);
    case Method::KnnD: return knn_d(training, net, demand, k, cfg);
    case Method::KnnLP: return knn_lp(training, net, demand, k, cfg, cache);
    case Method::KnnB: return knn_family(training, net, demand, k, FamilyVariant::B, cfg);
    case Method::KnnM: return knn_family(training, net, demand, k, FamilyVariant::M, cfg);
    case Method::KnnBM: return knn_family(training, net, demand, k, FamilyVariant::BM, cfg);
    case Method::KnnBhatM: return knn_bhatm(training, net, demand, k, cfg);
    case Method::AllhatM: return all_hatm(training, net, demand, cfg);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace otsknn
