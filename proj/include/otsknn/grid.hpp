#pragma once

// Power network data model for DC transmission switching.
//
// A Network is a plain value: buses (one load each), generators (any number
// per bus) and lines.  Lines flagged `switchable` form the candidate set whose
// on/off status is decided by the optimizer; the remaining lines must span and
// connect every bus.  Internal code addresses buses and lines by their
// position in the vectors; external ids are kept for I/O only.

#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace otsknn {

struct Bus {
  int id = 0;
  double demand = 0.0;  // MW
  bool slack = false;

  bool operator==(const Bus&) const = default;
};

struct Generator {
  int bus = 0;  // external bus id
  double cost = 0.0;  // currency / MWh
  double pmin = 0.0;  // MW
  double pmax = 0.0;  // MW

  bool operator==(const Generator&) const = default;
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double susceptance = 0.0;  // per unit on Network::base_mva
  double capacity = 0.0;  // MW
  bool switchable = false;

  bool operator==(const Line&) const = default;
};

/// 0/1 status per switchable line, ordered like Network::switchable_lines().
using Statuses = std::vector<std::uint8_t>;

struct Network {
  // Multiplies per-unit susceptance to give MW per radian.
  double base_mva = 1.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Line> lines;

  std::size_t bus_count() const { return buses.size(); }

  /// Susceptance in MW/rad of line `l` (position in `lines`).
  double flow_susceptance(std::size_t l) const { return base_mva * lines[l].susceptance; }

  std::vector<double> baseline_demand() const {
    std::vector<double> d;
    d.reserve(buses.size());
    for (const auto& b : buses) d.push_back(b.demand);
    return d;
  }

  /// Positions (into `lines`) of the switchable lines, in declaration order.
  std::vector<std::size_t> switchable_lines() const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < lines.size(); ++l)
      if (lines[l].switchable) out.push_back(l);
    return out;
  }

  std::size_t switchable_count() const {
    std::size_t n = 0;
    for (const auto& l : lines) n += l.switchable ? 1 : 0;
    return n;
  }

  /// Position of the slack bus; throws if there is none.
  std::size_t slack_position() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].slack) return i;
    throw std::runtime_error("no slack bus declared");
  }

  /// External bus id -> position.  Duplicate ids keep the first position.
  std::unordered_map<int, std::size_t> bus_positions() const {
    std::unordered_map<int, std::size_t> pos;
    for (std::size_t i = 0; i < buses.size(); ++i) pos.emplace(buses[i].id, i);
    return pos;
  }

  bool operator==(const Network&) const = default;
};

/// Bus and line endpoints resolved to positions.  Built once per network by
/// the model builders.
struct Incidence {
  std::vector<std::size_t> from;  // per line
  std::vector<std::size_t> to;  // per line
  std::vector<std::size_t> gen_bus;  // per generator
  std::vector<std::size_t> switchable;  // line positions
  std::vector<std::ptrdiff_t> switch_pos;  // per line, -1 if not switchable
  std::size_t slack = 0;

  explicit Incidence(const Network& net) {
    auto pos = net.bus_positions();
    auto at = [&](int id, const char* what) {
      auto it = pos.find(id);
      if (it == pos.end())
        throw std::invalid_argument(std::string("unknown bus ") + std::to_string(id) + " referenced by " + what);
      return it->second;
    };
    from.reserve(net.lines.size());
    to.reserve(net.lines.size());
    switch_pos.assign(net.lines.size(), -1);
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
      from.push_back(at(net.lines[l].from_bus, "line"));
      to.push_back(at(net.lines[l].to_bus, "line"));
      if (net.lines[l].switchable) {
        switch_pos[l] = static_cast<std::ptrdiff_t>(switchable.size());
        switchable.push_back(l);
      }
    }
    for (const auto& g : net.generators) gen_bus.push_back(at(g.bus, "generator"));
    slack = net.slack_position();
  }
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  NoSlack,
  MultipleSlack,
  NegativeDemand,
  DuplicateBusId,
  DuplicateLineId,
  UnknownBus,
  GeneratorLimits,
  SelfLoop,
  NonPositiveSusceptance,
  NonPositiveCapacity,
  Disconnected,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

inline std::string to_string(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) {
    if (!out.empty()) out += '\n';
    out += v.message;
  }
  return out;
}

/// Reports every structural violation.  Connectivity is checked over the
/// non-switchable lines only.
inline ValidationReport validate(const Network& net) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string msg) { report.push_back({k, std::move(msg)}); };

  std::size_t slack_count = 0;
  std::unordered_set<int> bus_ids;
  for (const auto& b : net.buses) {
    if (b.slack) ++slack_count;
    if (b.demand < 0.0) add(ViolationKind::NegativeDemand, "negative demand at bus " + std::to_string(b.id));
    if (!bus_ids.insert(b.id).second) add(ViolationKind::DuplicateBusId, "duplicate bus id " + std::to_string(b.id));
  }
  if (slack_count == 0) add(ViolationKind::NoSlack, "no slack bus declared");
  if (slack_count > 1) add(ViolationKind::MultipleSlack, "multiple slack buses");

  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    if (!bus_ids.count(gen.bus))
      add(ViolationKind::UnknownBus, "generator " + std::to_string(g) + " references unknown bus " + std::to_string(gen.bus));
    if (!(gen.pmin >= 0.0 && gen.pmin <= gen.pmax))
      add(ViolationKind::GeneratorLimits, "generator " + std::to_string(g) + " at bus " + std::to_string(gen.bus) +
                                              " violates 0 <= pmin <= pmax");
  }

  std::unordered_set<int> line_ids;
  bool endpoints_ok = true;
  for (const auto& l : net.lines) {
    const std::string tag = "line " + std::to_string(l.id);
    if (!line_ids.insert(l.id).second) add(ViolationKind::DuplicateLineId, "duplicate line id " + std::to_string(l.id));
    for (int end : {l.from_bus, l.to_bus}) {
      if (!bus_ids.count(end)) {
        add(ViolationKind::UnknownBus, tag + " references unknown bus " + std::to_string(end));
        endpoints_ok = false;
      }
    }
    if (l.from_bus == l.to_bus) add(ViolationKind::SelfLoop, tag + " has from_bus == to_bus");
    if (!(l.susceptance > 0.0)) add(ViolationKind::NonPositiveSusceptance, tag + " has non-positive susceptance");
    if (!(l.capacity > 0.0)) add(ViolationKind::NonPositiveCapacity, tag + " has non-positive capacity");
  }

  if (endpoints_ok && !net.buses.empty()) {
    auto pos = net.bus_positions();
    std::vector<std::vector<std::size_t>> adj(net.buses.size());
    for (const auto& l : net.lines) {
      if (l.switchable) continue;
      auto a = pos.at(l.from_bus), b = pos.at(l.to_bus);
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<bool> seen(net.buses.size(), false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          q.push(v);
        }
    }
    if (reached != net.buses.size()) {
      std::string msg = "non-switchable subgraph disconnected (unreached buses:";
      for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) msg += " " + std::to_string(net.buses[i].id);
      add(ViolationKind::Disconnected, msg + ")");
    }
  }
  return report;
}

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report)
      : std::runtime_error(to_string(report)), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

inline void require_valid(const Network& net) {
  auto report = validate(net);
  if (!report.empty()) throw ValidationError(std::move(report));
}

}  // namespace otsknn
