#pragma once

// Leave-one-out benchmark over a family of demand instances.
//
// Report files written by emit_report (comma-separated, one header row):
//   aggregate.csv   method,k,instances,n_opt,n_sub,n_infeasible,gap_max_pct,
//                   mean_time_s,mean_fixed_binaries,n_topology_match,n_bound_unproven
//   instances.csv   instance,method,k,class,cost,ben_cost,gap_pct,time_s,nodes,
//                   lp_iterations,fixed_binaries,topology_match,bound_unproven,statuses
//   curve_<method>[_k<K>].csv   time_s,solved
//   savings.csv     instance,allon_cost,ben_cost,savings_pct
//   bounds.csv      (optional) per switchable line, see emit_bound_table

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "otsknn/grid.hpp"
#include "otsknn/grid_io.hpp"
#include "otsknn/knn.hpp"
#include "otsknn/training.hpp"

namespace otsknn {

// ---------------------------------------------------------------------------
// Instances

struct InstanceFamily {
  std::string network_path;
  std::string network_hash;
  std::uint64_t seed = 0;
  double perturbation = 0.10;
  std::vector<std::vector<double>> demands;
};

/// Each bus demand drawn independently from U[(1-p) d, (1+p) d] around the
/// network's baseline.
inline InstanceFamily generate_instances(const Network& net, std::size_t count, std::uint64_t seed, double perturbation = 0.10) {
  if (count < 1) throw std::invalid_argument("instance count must be at least 1");
  if (!(perturbation >= 0.0 && perturbation <= 1.0)) throw std::invalid_argument("perturbation must lie in [0, 1]");
  InstanceFamily fam;
  fam.network_hash = network_hash(net);
  fam.seed = seed;
  fam.perturbation = perturbation;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(1.0 - perturbation, 1.0 + perturbation);
  const auto base = net.baseline_demand();
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> d(base.size());
    for (std::size_t n = 0; n < base.size(); ++n) {
      const double f = factor(rng);
      d[n] = perturbation == 0.0 ? base[n] : base[n] * f;
    }
    fam.demands.push_back(std::move(d));
  }
  return fam;
}

inline void write_instances(std::ostream& out, const InstanceFamily& fam) {
  nlohmann::json header = {{"format", "otsknn-instances"},  {"version", 1},
                           {"network", fam.network_path},   {"network_hash", fam.network_hash},
                           {"seed", fam.seed},              {"perturbation", fam.perturbation},
                           {"count", fam.demands.size()}};
  out << header.dump() << "\n";
  for (const auto& d : fam.demands) out << nlohmann::json(d).dump() << "\n";
}

inline InstanceFamily read_instances(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw StoreError("empty instance file");
  InstanceFamily fam;
  try {
    auto h = nlohmann::json::parse(line);
    if (h.value("format", "") != "otsknn-instances") throw StoreError("not an instance file");
    fam.network_path = h.value("network", "");
    fam.network_hash = h.value("network_hash", "");
    fam.seed = h.value("seed", std::uint64_t{0});
    fam.perturbation = h.value("perturbation", 0.0);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        fam.demands.push_back(nlohmann::json::parse(line).get<std::vector<double>>());
      } catch (const nlohmann::json::exception& e) {
        throw StoreError("instance line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw StoreError(std::string("bad instance header: ") + e.what());
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Parallel map over instance indices

/// Calls fn(i) for i in [0, count) on `workers` threads; the first exception
/// is rethrown after all threads join.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Training store

struct TrainConfig {
  MethodConfig method;
  std::size_t workers = 1;
  std::ostream* progress = nullptr;
};

/// Solves every instance with the exact method.  Instances without any
/// feasible topology are skipped and reported on the progress stream.
inline TrainingStore build_training_store(const Network& net, const InstanceFamily& fam, const TrainConfig& cfg = {}) {
  std::vector<std::optional<TrainingRecord>> slots(fam.demands.size());
  std::mutex progress_mutex;
  parallel_for(fam.demands.size(), cfg.workers, [&](std::size_t i) {
    auto out = ben(net, fam.demands[i], cfg.method);
    if (out.cost.is_finite()) {
      TrainingRecord r;
      r.demand = fam.demands[i];
      r.statuses = *out.statuses;
      r.angles = out.angles;
      r.cost = out.cost.value();
      r.time_limited = out.mip_status == MipStatus::FeasibleTimeLimit;
      slots[i] = std::move(r);
    }
    if (cfg.progress) {
      std::lock_guard lock(progress_mutex);
      *cfg.progress << "instance " << i << " " << to_string(*out.mip_status) << " cost " << out.cost << " nodes " << out.nodes
                    << " time " << out.wall_time << "\n";
    }
  });
  TrainingStore store;
  store.network_path = fam.network_path;
  store.network_hash = network_hash(net);
  for (auto& s : slots)
    if (s) store.records.push_back(std::move(*s));
  return store;
}

// ---------------------------------------------------------------------------
// Leave-one-out

struct MethodSpec {
  Method method = Method::Ben;
  std::size_t k = 0;  // 0 for methods that ignore it

  bool operator==(const MethodSpec&) const = default;
  std::string label() const { return uses_k(method) ? std::string(to_string(method)) + "_k" + std::to_string(k) : to_string(method); }
};

/// Expands methods x K grid; methods without a K appear once.
inline std::vector<MethodSpec> expand_grid(const std::vector<Method>& methods, const std::vector<std::size_t>& ks) {
  std::vector<MethodSpec> out;
  for (auto m : methods) {
    if (!uses_k(m)) {
      out.push_back({m, 0});
      continue;
    }
    if (ks.empty()) throw std::invalid_argument(std::string("method ") + to_string(m) + " needs a K grid");
    for (auto k : ks) out.push_back({m, k});
  }
  return out;
}

enum class Outcome { Optimal, Suboptimal, Infeasible };

inline const char* to_string(Outcome c) {
  switch (c) {
    case Outcome::Optimal: return "opt";
    case Outcome::Suboptimal: return "sub";
    case Outcome::Infeasible: return "infeasible";
  }
  return "?";
}

inline Outcome classify(const Cost& cost, double ben_cost, double tolerance) {
  if (!cost.is_finite()) return Outcome::Infeasible;
  const double gap = (cost.value() - ben_cost) / std::max(std::abs(ben_cost), 1e-10);
  return gap <= tolerance ? Outcome::Optimal : Outcome::Suboptimal;
}

/// 100 (C - C_ben) / C_ben.
inline double gap_percent(double cost, double ben_cost) { return 100.0 * (cost - ben_cost) / std::max(std::abs(ben_cost), 1e-10); }

inline std::optional<double> savings_percent(const Cost& all_on, double ben_cost) {
  if (!all_on.is_finite()) return std::nullopt;
  return 100.0 * (all_on.value() - ben_cost) / std::max(std::abs(all_on.value()), 1e-10);
}

struct Cell {
  MethodOutcome outcome;
  Outcome cls = Outcome::Infeasible;
  std::optional<double> gap_pct;
  bool topology_match = false;
};

struct InstanceResult {
  std::size_t index = 0;
  double ben_cost = 0.0;
  bool ben_time_limited = false;
  Cost all_on_cost = Cost::infinite();
  std::vector<Cell> cells;  // parallel to RunReport::grid
};

struct Aggregate {
  MethodSpec spec;
  std::size_t instances = 0, n_opt = 0, n_sub = 0, n_infeasible = 0;
  std::optional<double> gap_max_pct;
  double mean_time = 0.0;
  double mean_fixed_binaries = 0.0;
  std::size_t n_topology_match = 0;
  std::size_t n_bound_unproven = 0;
};

struct SavingsSummary {
  double mean_pct = 0.0;
  double min_pct = 0.0;
  std::size_t counted = 0;
  std::size_t excluded_infeasible_all_on = 0;
};

struct RunReport {
  std::vector<MethodSpec> grid;
  std::vector<InstanceResult> instances;
  std::vector<Aggregate> aggregates;
  SavingsSummary savings;
};

struct LooConfig {
  MethodConfig method;
  double tolerance = 1e-4;  // classification tolerance, relative
  std::size_t workers = 1;
  bool exclude_time_limited = false;
  std::optional<std::size_t> max_instances;
  std::ostream* progress = nullptr;
};

inline std::vector<Aggregate> aggregate(const std::vector<MethodSpec>& grid, const std::vector<InstanceResult>& instances) {
  std::vector<Aggregate> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    Aggregate a;
    a.spec = grid[g];
    for (const auto& inst : instances) {
      const auto& c = inst.cells[g];
      ++a.instances;
      switch (c.cls) {
        case Outcome::Optimal: ++a.n_opt; break;
        case Outcome::Suboptimal:
          ++a.n_sub;
          a.gap_max_pct = std::max(a.gap_max_pct.value_or(-std::numeric_limits<double>::infinity()), *c.gap_pct);
          break;
        case Outcome::Infeasible: ++a.n_infeasible; break;
      }
      a.mean_time += c.outcome.wall_time;
      a.mean_fixed_binaries += static_cast<double>(c.outcome.fixed_binaries);
      a.n_topology_match += c.topology_match;
      a.n_bound_unproven += c.outcome.bound_validity_unproven;
    }
    if (a.instances) {
      a.mean_time /= static_cast<double>(a.instances);
      a.mean_fixed_binaries /= static_cast<double>(a.instances);
    }
    out.push_back(a);
  }
  return out;
}

/// Runs every grid entry on every record with the remaining records as
/// training data, and scores against the stored exact costs.  A finite cost
/// below the stored exact cost by more than the tolerance aborts the run.
inline RunReport leave_one_out(const TrainingStore& store, const Network& net, const std::vector<MethodSpec>& grid,
                               const LooConfig& cfg = {}) {
  if (store.records.size() < 2) throw std::invalid_argument("leave-one-out needs at least two records");
  for (const auto& spec : grid)
    if (uses_k(spec.method) && (spec.k < 1 || spec.k > store.records.size() - 1))
      throw std::invalid_argument("K=" + std::to_string(spec.k) + " outside [1, " + std::to_string(store.records.size() - 1) + "]");
  std::size_t count = store.records.size();
  if (cfg.max_instances) count = std::min(count, *cfg.max_instances);

  RunReport report;
  report.grid = grid;
  report.instances.resize(count);
  std::mutex progress_mutex;
  parallel_for(count, cfg.workers, [&](std::size_t t) {
    const auto& test = store.records[t];
    std::vector<TrainingRecord> training;
    for (std::size_t i = 0; i < store.records.size(); ++i)
      if (i != t && !(cfg.exclude_time_limited && store.records[i].time_limited)) training.push_back(store.records[i]);

    InstanceResult r;
    r.index = t;
    r.ben_cost = test.cost;
    r.ben_time_limited = test.time_limited;
    CostCache cache;
    r.all_on_cost = cache.evaluate(net, test.demand, Statuses(net.switchable_count(), 1), cfg.method.mip.lp).cost;
    for (const auto& spec : grid) {
      Cell c;
      c.outcome = run_method(spec.method, training, net, test.demand, spec.k, cfg.method, &cache);
      c.cls = classify(c.outcome.cost, test.cost, cfg.tolerance);
      if (c.outcome.cost.is_finite()) {
        c.gap_pct = gap_percent(c.outcome.cost.value(), test.cost);
        const double floor = test.cost - cfg.tolerance * std::max(std::abs(test.cost), 1.0);
        if (!test.time_limited && c.outcome.cost.value() < floor)
          throw std::logic_error("instance " + std::to_string(t) + ": " + spec.label() + " cost " + c.outcome.cost.str() +
                                 " is below the exact cost " + format_double(test.cost));
      }
      c.topology_match = c.outcome.statuses && *c.outcome.statuses == test.statuses;
      r.cells.push_back(std::move(c));
    }
    if (cfg.progress) {
      std::lock_guard lock(progress_mutex);
      *cfg.progress << "instance " << t << " done\n";
    }
    report.instances[t] = std::move(r);
  });

  report.aggregates = aggregate(grid, report.instances);
  double sum = 0.0;
  report.savings.min_pct = std::numeric_limits<double>::infinity();
  for (const auto& inst : report.instances) {
    auto s = savings_percent(inst.all_on_cost, inst.ben_cost);
    if (!s) {
      ++report.savings.excluded_infeasible_all_on;
      continue;
    }
    sum += *s;
    report.savings.min_pct = std::min(report.savings.min_pct, *s);
    ++report.savings.counted;
  }
  if (report.savings.counted)
    report.savings.mean_pct = sum / static_cast<double>(report.savings.counted);
  else
    report.savings.min_pct = 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Bound comparison

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return lo > hi; }
};

struct BoundRow {
  int line_id = 0, from_bus = 0, to_bus = 0;
  BigM ben;
  Range bm_lower, bm_upper;
  std::size_t bm_exact = 0;  // instances where the line was fixed on
  Range bhatm_lower, bhatm_upper;
};

/// Per switchable line: spanning bounds, and the range over leave-one-out
/// instances of the updated-path bounds and historic-angle bounds at `k`.
inline std::vector<BoundRow> bound_table(const TrainingStore& store, const Network& net, std::size_t k) {
  if (store.records.size() < 2) throw std::invalid_argument("bound table needs at least two records");
  if (k < 1 || k > store.records.size() - 1) throw std::invalid_argument("K outside the training range");
  const auto spanning = shortest_path_bigm(net);
  Incidence inc(net);
  std::vector<BoundRow> rows(inc.switchable.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const auto& line = net.lines[inc.switchable[s]];
    rows[s].line_id = line.id;
    rows[s].from_bus = line.from_bus;
    rows[s].to_bus = line.to_bus;
    rows[s].ben = spanning.at(s);
  }
  for (std::size_t t = 0; t < store.records.size(); ++t) {
    std::vector<TrainingRecord> training;
    for (std::size_t i = 0; i < store.records.size(); ++i)
      if (i != t) training.push_back(store.records[i]);
    auto nb = nearest_neighbors(training, store.records[t].demand, k);
    auto u = unanimity_bounds(neighbor_statuses(training, nb));
    std::set<std::size_t> on;
    for (auto [s, v] : u.fixed)
      if (v == 1) on.insert(s);
    auto bm = shortest_path_bigm(net, on);
    auto hat = historic_angle_bigm(training, net, spanning);
    for (std::size_t s = 0; s < rows.size(); ++s) {
      if (bm.has(s)) {
        rows[s].bm_lower.add(bm.at(s).lower);
        rows[s].bm_upper.add(bm.at(s).upper);
      } else {
        ++rows[s].bm_exact;
      }
      rows[s].bhatm_lower.add(hat.at(s).lower);
      rows[s].bhatm_upper.add(hat.at(s).upper);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : (v > 0 ? "inf" : "-inf"); }

inline std::string csv_optional(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

inline std::string statuses_string(const std::optional<Statuses>& s) {
  if (!s) return "";
  std::string out;
  for (auto v : *s) out.push_back(v ? '1' : '0');
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw FileError("cannot write " + p.string());
  return f;
}

}  // namespace detail

inline const char* kAggregateHeader =
    "method,k,instances,n_opt,n_sub,n_infeasible,gap_max_pct,mean_time_s,mean_fixed_binaries,n_topology_match,n_bound_unproven";
inline const char* kInstancesHeader =
    "instance,method,k,class,cost,ben_cost,gap_pct,time_s,nodes,lp_iterations,fixed_binaries,topology_match,bound_unproven,"
    "statuses";

inline void write_aggregate_csv(std::ostream& out, const RunReport& report) {
  out << kAggregateHeader << "\n";
  for (const auto& a : report.aggregates) {
    out << to_string(a.spec.method) << "," << a.spec.k << "," << a.instances << "," << a.n_opt << "," << a.n_sub << ","
        << a.n_infeasible << "," << detail::csv_optional(a.gap_max_pct) << "," << detail::csv_number(a.mean_time) << ","
        << detail::csv_number(a.mean_fixed_binaries) << "," << a.n_topology_match << "," << a.n_bound_unproven << "\n";
  }
}

inline void write_instances_csv(std::ostream& out, const RunReport& report) {
  out << kInstancesHeader << "\n";
  for (const auto& inst : report.instances) {
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
      const auto& c = inst.cells[g];
      const auto& o = c.outcome;
      out << inst.index << "," << to_string(report.grid[g].method) << "," << report.grid[g].k << "," << to_string(c.cls) << ","
          << o.cost.str() << "," << detail::csv_number(inst.ben_cost) << "," << detail::csv_optional(c.gap_pct) << ","
          << detail::csv_number(o.wall_time) << "," << o.nodes << "," << o.lp_iterations << "," << o.fixed_binaries << ","
          << c.topology_match << "," << o.bound_validity_unproven << "," << detail::statuses_string(o.statuses) << "\n";
    }
  }
}

/// Cumulative count of finished instances against wall time.
inline std::vector<std::pair<double, std::size_t>> solved_curve(const RunReport& report, std::size_t g) {
  std::vector<double> times;
  for (const auto& inst : report.instances) times.push_back(inst.cells[g].outcome.wall_time);
  std::sort(times.begin(), times.end());
  std::vector<std::pair<double, std::size_t>> out;
  for (std::size_t i = 0; i < times.size(); ++i) out.emplace_back(times[i], i + 1);
  return out;
}

inline void write_bound_table(std::ostream& out, const std::vector<BoundRow>& rows) {
  out << "line,from,to,ben_lower,ben_upper,bm_lower_min,bm_lower_max,bm_upper_min,bm_upper_max,bm_exact,"
         "bhatm_lower_min,bhatm_lower_max,bhatm_upper_min,bhatm_upper_max\n";
  auto range = [](const Range& r) {
    return r.empty() ? std::string(",") : detail::csv_number(r.lo) + "," + detail::csv_number(r.hi);
  };
  for (const auto& r : rows) {
    out << r.line_id << "," << r.from_bus << "," << r.to_bus << "," << detail::csv_number(r.ben.lower) << ","
        << detail::csv_number(r.ben.upper) << "," << range(r.bm_lower) << "," << range(r.bm_upper) << "," << r.bm_exact << ","
        << range(r.bhatm_lower) << "," << range(r.bhatm_upper) << "\n";
  }
}

inline void emit_report(const RunReport& report, const std::filesystem::path& dir,
                        const std::vector<BoundRow>* bounds = nullptr) {
  std::filesystem::create_directories(dir);
  {
    auto f = detail::open_out(dir / "aggregate.csv");
    write_aggregate_csv(f, report);
  }
  {
    auto f = detail::open_out(dir / "instances.csv");
    write_instances_csv(f, report);
  }
  for (std::size_t g = 0; g < report.grid.size(); ++g) {
    auto f = detail::open_out(dir / ("curve_" + report.grid[g].label() + ".csv"));
    f << "time_s,solved\n";
    for (auto [t, n] : solved_curve(report, g)) f << detail::csv_number(t) << "," << n << "\n";
  }
  {
    auto f = detail::open_out(dir / "savings.csv");
    f << "instance,allon_cost,ben_cost,savings_pct\n";
    for (const auto& inst : report.instances) {
      f << inst.index << "," << inst.all_on_cost.str() << "," << detail::csv_number(inst.ben_cost) << ","
        << detail::csv_optional(savings_percent(inst.all_on_cost, inst.ben_cost)) << "\n";
    }
  }
  if (bounds) {
    auto f = detail::open_out(dir / "bounds.csv");
    write_bound_table(f, *bounds);
  }
}

// ---------------------------------------------------------------------------
// Config file: `key = value` lines, `#` comments.
//
//   network = path            instances = 50        seed = 1
//   perturbation = 0.1        methods = ben,knn-d   k_grid = 1,5,10
//   gap = 1e-4                mip_gap = 1e-4        time_limit = 3600
//   workers = 1               exclude_time_limited = false

struct BenchConfig {
  std::string network;
  std::size_t instances = 50;
  std::uint64_t seed = 0;
  double perturbation = 0.10;
  std::vector<Method> methods;
  std::vector<std::size_t> k_grid;
  double gap = 1e-4;
  double mip_gap = 1e-4;
  double time_limit = 3600.0;
  std::size_t workers = 1;
  bool exclude_time_limited = false;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    auto a = item.find_first_not_of(" \t");
    auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

inline std::vector<Method> parse_method_list(const std::string& s) {
  std::vector<Method> out;
  for (const auto& name : split_list(s)) {
    auto m = parse_method(name);
    if (!m) throw std::invalid_argument("unknown method '" + name + "'");
    out.push_back(*m);
  }
  return out;
}

inline std::vector<std::size_t> parse_k_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    auto v = detail::to_integer(item);
    if (!v || *v < 1) throw std::invalid_argument("K values must be positive integers, got '" + item + "'");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = raw.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, 1, "expected key = value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    auto number = [&](const char* what) {
      auto v = detail::to_double(value);
      if (!v) throw ParseError(lineno, eq + 2, std::string(what) + " expects a number");
      return *v;
    };
    auto count = [&](const char* what) {
      auto v = detail::to_integer(value);
      if (!v || *v < 0) throw ParseError(lineno, eq + 2, std::string(what) + " expects a non-negative integer");
      return static_cast<std::uint64_t>(*v);
    };
    try {
      if (key == "network") cfg.network = value;
      else if (key == "instances") cfg.instances = count("instances");
      else if (key == "seed") cfg.seed = count("seed");
      else if (key == "perturbation") cfg.perturbation = number("perturbation");
      else if (key == "methods") cfg.methods = parse_method_list(value);
      else if (key == "k_grid") cfg.k_grid = parse_k_list(value);
      else if (key == "gap") cfg.gap = number("gap");
      else if (key == "mip_gap") cfg.mip_gap = number("mip_gap");
      else if (key == "time_limit") cfg.time_limit = number("time_limit");
      else if (key == "workers") cfg.workers = count("workers");
      else if (key == "exclude_time_limited") {
        if (value != "true" && value != "false") throw ParseError(lineno, eq + 2, "expected true or false");
        cfg.exclude_time_limited = value == "true";
      } else {
        throw ParseError(lineno, 1, "unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, eq + 2, e.what());
    }
  }
  return cfg;
}

}  // namespace otsknn
