#pragma once

// DC optimal power flow and DC optimal transmission switching models.
//
// Variable layout shared by every model built here:
//   [generators | bus angles | line flows | switch statuses (MIP only)]
//
// Nodal balance at bus n:  sum(p_g at n) + inflow(n) - outflow(n) = d_n,
// with a line's flow positive from its from_bus to its to_bus and
// f = b (theta_from - theta_to) for lines in service.  b is the flow
// susceptance in MW/rad (base_mva * per-unit susceptance).
//
// A switchable line with status x carries the big-M pair
//   b(theta_n - theta_m) - Mup (1 - x) <= f <= b(theta_n - theta_m) - Mlo (1 - x)
// and -x cap <= f <= x cap.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "otsknn/grid.hpp"
#include "otsknn/lp.hpp"
#include "otsknn/mip.hpp"
#include "otsknn/shortest_path.hpp"
#include "otsknn/training.hpp"

namespace otsknn {

/// Dispatch cost or +infinity for an infeasible topology.  Infinity is a
/// state, never a float that flows into arithmetic.
class Cost {
 public:
  static Cost infinite() { return Cost(); }
  static Cost of(double v) {
    Cost c;
    c.finite_ = true;
    c.value_ = v;
    return c;
  }

  bool is_finite() const { return finite_; }
  double value() const {
    if (!finite_) throw std::logic_error("value() of an infinite cost");
    return value_;
  }
  double value_or_inf() const { return finite_ ? value_ : kInfinity; }

  friend bool operator<(const Cost& a, const Cost& b) {
    if (!a.finite_) return false;
    if (!b.finite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator==(const Cost& a, const Cost& b) {
    return a.finite_ == b.finite_ && (!a.finite_ || a.value_ == b.value_);
  }

  std::string str() const { return finite_ ? format_double(value_) : "inf"; }

 private:
  Cost() = default;
  bool finite_ = false;
  double value_ = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, const Cost& c) { return os << c.str(); }

struct BigM {
  double lower = 0.0;
  double upper = 0.0;

  bool operator==(const BigM&) const = default;
};

/// Per switchable line (indexed like Statuses); absent entries mean the line
/// has no bound of this family.
struct BigMBounds {
  std::vector<std::optional<BigM>> lines;

  BigMBounds() = default;
  explicit BigMBounds(std::size_t switchable) : lines(switchable) {}

  std::size_t size() const { return lines.size(); }
  bool has(std::size_t s) const { return s < lines.size() && lines[s].has_value(); }
  const BigM& at(std::size_t s) const {
    if (!has(s)) throw std::out_of_range("no big-M bound for switchable line " + std::to_string(s));
    return *lines[s];
  }
  void set(std::size_t s, BigM m) {
    if (m.lower > m.upper) throw std::invalid_argument("big-M lower bound above upper bound");
    lines.at(s) = m;
  }

  bool operator==(const BigMBounds&) const = default;
};

struct DispatchSolution {
  std::vector<double> generation;  // MW per generator
  std::vector<double> angles;  // rad per bus
  std::vector<double> flows;  // MW per line
  Statuses statuses;
  double cost = 0.0;
};

struct ModelLayout {
  std::size_t generators = 0, buses = 0, lines = 0, switchable = 0;

  explicit ModelLayout(const Network& net)
      : generators(net.generators.size()), buses(net.bus_count()), lines(net.lines.size()), switchable(net.switchable_count()) {}

  int gen(std::size_t g) const { return static_cast<int>(g); }
  int angle(std::size_t n) const { return static_cast<int>(generators + n); }
  int flow(std::size_t l) const { return static_cast<int>(generators + buses + l); }
  int status(std::size_t s) const { return static_cast<int>(generators + buses + lines + s); }

  DispatchSolution extract(const std::vector<double>& x, double cost, bool with_status) const {
    DispatchSolution d;
    d.generation.assign(x.begin() + gen(0), x.begin() + gen(0) + static_cast<std::ptrdiff_t>(generators));
    d.angles.assign(x.begin() + angle(0), x.begin() + angle(0) + static_cast<std::ptrdiff_t>(buses));
    d.flows.assign(x.begin() + flow(0), x.begin() + flow(0) + static_cast<std::ptrdiff_t>(lines));
    if (with_status)
      for (std::size_t s = 0; s < switchable; ++s) d.statuses.push_back(x[status(s)] > 0.5 ? 1 : 0);
    d.cost = cost;
    return d;
  }
};

namespace detail {

inline void check_dimensions(const Network& net, std::span<const double> demand) {
  if (demand.size() != net.bus_count())
    throw std::invalid_argument("demand has " + std::to_string(demand.size()) + " entries, network has " +
                                std::to_string(net.bus_count()) + " buses");
}

inline void check_statuses(const Network& net, const Statuses& statuses) {
  if (statuses.size() != net.switchable_count())
    throw std::invalid_argument("statuses have " + std::to_string(statuses.size()) + " entries, network has " +
                                std::to_string(net.switchable_count()) + " switchable lines");
}

/// Generator, angle and flow variables plus one balance row per bus.
inline LinearProgram base_model(const Network& net, const Incidence& inc, std::span<const double> demand, bool with_status) {
  ModelLayout layout(net);
  LinearProgram lp;
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    lp.add_variable(gen.pmin, gen.pmax, gen.cost, "p" + std::to_string(g));
  }
  for (std::size_t n = 0; n < net.bus_count(); ++n) {
    const double pin = n == inc.slack ? 0.0 : kInfinity;
    lp.add_variable(-pin, pin, 0.0, "theta" + std::to_string(net.buses[n].id));
  }
  for (std::size_t l = 0; l < net.lines.size(); ++l)
    lp.add_variable(-net.lines[l].capacity, net.lines[l].capacity, 0.0, "f" + std::to_string(net.lines[l].id));
  if (with_status)
    for (std::size_t s = 0; s < inc.switchable.size(); ++s)
      lp.add_variable(0.0, 1.0, 0.0, "x" + std::to_string(net.lines[inc.switchable[s]].id));

  std::vector<std::vector<Term>> rows(net.bus_count());
  for (std::size_t g = 0; g < net.generators.size(); ++g) rows[inc.gen_bus[g]].push_back({layout.gen(g), 1.0});
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    rows[inc.from[l]].push_back({layout.flow(l), -1.0});
    rows[inc.to[l]].push_back({layout.flow(l), 1.0});
  }
  for (std::size_t n = 0; n < net.bus_count(); ++n)
    lp.add_constraint(std::move(rows[n]), Relation::Equal, demand[n], "balance" + std::to_string(net.buses[n].id));
  return lp;
}

inline void add_flow_equation(LinearProgram& lp, const Network& net, const Incidence& inc, const ModelLayout& layout,
                              std::size_t l) {
  const double b = net.flow_susceptance(l);
  lp.add_constraint({{layout.flow(l), 1.0}, {layout.angle(inc.from[l]), -b}, {layout.angle(inc.to[l]), b}}, Relation::Equal,
                    0.0, "ohm" + std::to_string(net.lines[l].id));
}

}  // namespace detail

/// LP whose optimum is the dispatch cost of `demand` under fixed `statuses`.
inline LinearProgram build_opf_lp(const Network& net, std::span<const double> demand, const Statuses& statuses) {
  detail::check_dimensions(net, demand);
  detail::check_statuses(net, statuses);
  Incidence inc(net);
  ModelLayout layout(net);
  LinearProgram lp = detail::base_model(net, inc, demand, false);
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const auto s = inc.switch_pos[l];
    if (s >= 0 && statuses[static_cast<std::size_t>(s)] == 0) {
      lp.set_bounds(layout.flow(l), 0.0, 0.0);
      continue;
    }
    detail::add_flow_equation(lp, net, inc, layout, l);
  }
  return lp;
}

inline std::optional<DispatchSolution> evaluate_dispatch(const Network& net, std::span<const double> demand,
                                                         const Statuses& statuses, const LpConfig& config = {}) {
  auto lp = build_opf_lp(net, demand, statuses);
  auto sol = solve_lp(lp, config);
  if (sol.status == LpStatus::Infeasible) return std::nullopt;
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error(std::string("dispatch LP ended with status ") + to_string(sol.status));
  auto d = ModelLayout(net).extract(sol.primal, sol.objective, false);
  d.statuses = statuses;
  return d;
}

/// C(demand, statuses): optimal dispatch cost, or infinite when infeasible.
inline Cost evaluate_cost(const Network& net, std::span<const double> demand, const Statuses& statuses,
                          const LpConfig& config = {}) {
  auto d = evaluate_dispatch(net, demand, statuses, config);
  return d ? Cost::of(d->cost) : Cost::infinite();
}

/// Symmetric bounds b_nm * (shortest path from n to m, weighted cap/b) over
/// the non-switchable lines plus `extra_closed`.  Lines in `extra_closed`
/// get no entry.
inline BigMBounds shortest_path_bigm(const Network& net, const std::set<std::size_t>& extra_closed = {}) {
  Incidence inc(net);
  WeightedGraph<double> graph(net.bus_count());
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const auto s = inc.switch_pos[l];
    if (s >= 0 && !extra_closed.count(static_cast<std::size_t>(s))) continue;
    graph.add_edge(inc.from[l], inc.to[l], net.lines[l].capacity / net.flow_susceptance(l));
  }
  if (!graph.connected()) throw std::runtime_error("disconnected base graph for shortest-path big-M");
  BigMBounds out(inc.switchable.size());
  std::map<std::size_t, std::vector<double>> by_source;
  for (std::size_t s = 0; s < inc.switchable.size(); ++s) {
    if (extra_closed.count(s)) continue;
    const std::size_t l = inc.switchable[s];
    auto it = by_source.find(inc.from[l]);
    if (it == by_source.end()) it = by_source.emplace(inc.from[l], graph.distances_from(inc.from[l])).first;
    const double m = net.flow_susceptance(l) * it->second[inc.to[l]];
    out.set(s, {-m, m});
  }
  return out;
}

/// Bounds from observed angle differences over records where the line was
/// open; lines never observed open keep `fallback`.
inline BigMBounds historic_angle_bigm(std::span<const TrainingRecord> training, const Network& net,
                                      const BigMBounds& fallback) {
  Incidence inc(net);
  BigMBounds out(inc.switchable.size());
  for (std::size_t s = 0; s < inc.switchable.size(); ++s) {
    const std::size_t l = inc.switchable[s];
    double lo = kInfinity, hi = -kInfinity;
    for (const auto& r : training) {
      if (r.statuses.at(s) != 0) continue;
      const double diff = r.angles.at(inc.from[l]) - r.angles.at(inc.to[l]);
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
    }
    if (hi >= lo) {
      const double b = net.flow_susceptance(l);
      out.set(s, {b * lo, b * hi});
    } else if (fallback.has(s)) {
      out.set(s, fallback.at(s));
    }
  }
  return out;
}

struct OtsModel {
  MixedIntegerProgram mip;
  ModelLayout layout;
  std::vector<std::string> build_log;

  DispatchSolution dispatch(const std::vector<double>& x, double cost) const { return layout.extract(x, cost, true); }
};

/// Big-M MILP for demand `demand`.  `fixed` pins statuses (switchable index
/// -> 0/1).  Free lines need a bound; a line fixed on with no bound uses the
/// exact flow equation; a line fixed off with no bound drops its angle rows.
inline OtsModel build_ots_mip(const Network& net, std::span<const double> demand, const BigMBounds& bounds,
                              const std::map<std::size_t, int>& fixed = {}) {
  detail::check_dimensions(net, demand);
  Incidence inc(net);
  OtsModel model{{}, ModelLayout(net), {}};
  const auto& layout = model.layout;
  LinearProgram lp = detail::base_model(net, inc, demand, true);
  for (auto [s, v] : fixed) {
    if (s >= inc.switchable.size()) throw std::invalid_argument("fixed status for unknown switchable line " + std::to_string(s));
    if (v != 0 && v != 1) throw std::invalid_argument("fixed statuses must be 0 or 1");
  }
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const auto sp = inc.switch_pos[l];
    if (sp < 0) {
      detail::add_flow_equation(lp, net, inc, layout, l);
      continue;
    }
    const auto s = static_cast<std::size_t>(sp);
    const auto fx = fixed.find(s);
    const double b = net.flow_susceptance(l);
    const double cap = net.lines[l].capacity;
    const int f = layout.flow(l), x = layout.status(s);
    const int af = layout.angle(inc.from[l]), at = layout.angle(inc.to[l]);
    const std::string tag = std::to_string(net.lines[l].id);

    std::optional<BigM> m;
    if (bounds.has(s)) {
      m = bounds.at(s);
    } else if (fx == fixed.end()) {
      throw std::invalid_argument("missing big-M bound for free switchable line " + tag);
    } else if (fx->second == 1) {
      m = BigM{0.0, 0.0};
      model.build_log.push_back("line " + tag + " fixed on without bound: exact flow equation");
    } else {
      model.build_log.push_back("line " + tag + " fixed off without bound: angle rows dropped");
    }
    if (m) {
      lp.add_constraint({{f, 1.0}, {af, -b}, {at, b}, {x, -m->upper}}, Relation::GreaterEqual, -m->upper, "bigm_up" + tag);
      lp.add_constraint({{f, 1.0}, {af, -b}, {at, b}, {x, -m->lower}}, Relation::LessEqual, -m->lower, "bigm_lo" + tag);
    }
    lp.add_constraint({{f, 1.0}, {x, -cap}}, Relation::LessEqual, 0.0, "cap_up" + tag);
    lp.add_constraint({{f, 1.0}, {x, cap}}, Relation::GreaterEqual, 0.0, "cap_lo" + tag);
    if (fx != fixed.end() && fx->second == 0) lp.set_bounds(f, 0.0, 0.0);
  }
  model.mip.lp = std::move(lp);
  for (std::size_t s = 0; s < inc.switchable.size(); ++s) model.mip.binary_indices.push_back(layout.status(s));
  if (!fixed.empty()) {
    std::map<int, int> assign;
    for (auto [s, v] : fixed) assign[layout.status(s)] = v;
    model.mip = fix_binaries(model.mip, assign);
  }
  return model;
}

}  // namespace otsknn
