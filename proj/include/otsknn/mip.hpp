#pragma once

// Branch-and-bound over 0/1 variables on top of the simplex engine.
//
// Default search: depth-first dive until the first incumbent, best-bound
// afterwards with ties going to the deepest, newest node.  While diving, each
// node also tries two roundings of its relaxation as a quick incumbent.
// Children inherit the parent's final basis as a warm start.
// The search stops when the relative gap (incumbent - bound) / max(|incumbent|,
// 1e-10) reaches the configured tolerance, the tree is exhausted, or a
// time/node limit is hit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "otsknn/lp.hpp"

namespace otsknn {

struct MixedIntegerProgram {
  LinearProgram lp;
  std::vector<int> binary_indices;

  std::vector<std::string> problems() const {
    auto out = lp.problems();
    std::set<int> seen;
    for (int j : binary_indices) {
      if (j < 0 || j >= lp.num_variables()) {
        out.push_back("binary index " + std::to_string(j) + " is not a variable");
        continue;
      }
      if (!seen.insert(j).second) out.push_back("binary index " + std::to_string(j) + " listed twice");
      if (lp.lower(j) < 0.0 || lp.upper(j) > 1.0)
        out.push_back("binary variable " + std::to_string(j) + " has bounds outside [0,1]");
    }
    return out;
  }
};

enum class MipStatus { OptimalWithinGap, FeasibleTimeLimit, Infeasible, NoIncumbentTimeLimit };

inline const char* to_string(MipStatus s) {
  switch (s) {
    case MipStatus::OptimalWithinGap: return "optimal-within-gap";
    case MipStatus::FeasibleTimeLimit: return "feasible-time-limit";
    case MipStatus::Infeasible: return "infeasible";
    case MipStatus::NoIncumbentTimeLimit: return "no-incumbent-time-limit";
  }
  return "?";
}

enum class BranchingRule { MostFractional, FirstFractional, Random };
enum class NodeSelection { DiveThenBestBound, BestBound, DepthFirst };

struct MipConfig {
  double gap_tolerance = 1e-4;
  double time_limit = 3600.0;  // seconds
  long node_limit = std::numeric_limits<long>::max();
  BranchingRule branching = BranchingRule::MostFractional;
  NodeSelection node_selection = NodeSelection::DiveThenBestBound;
  // Only consumed by BranchingRule::Random.
  std::uint64_t seed = 0;
  LpConfig lp;
  double integrality_tol = 1e-6;
  // Try two roundings of the relaxation at each node until the first
  // incumbent exists.
  bool rounding_heuristic = true;
  // One line per node when set.
  std::ostream* log = nullptr;
};

struct MipSolution {
  MipStatus status = MipStatus::Infeasible;
  std::optional<std::vector<double>> incumbent;
  double objective = kInfinity;
  double bound = -kInfinity;
  double gap = kInfinity;
  double root_bound = -kInfinity;
  long nodes = 0;
  long lp_iterations = 0;
  long lp_failures = 0;
  double wall_time = 0.0;

  bool has_incumbent() const { return incumbent.has_value(); }
};

inline double relative_gap(double objective, double bound) {
  if (!std::isfinite(objective)) return kInfinity;
  if (!std::isfinite(bound)) return kInfinity;
  return std::max(0.0, objective - bound) / std::max(std::abs(objective), 1e-10);
}

/// Copy of `mip` with each listed binary pinned to its value.
inline MixedIntegerProgram fix_binaries(const MixedIntegerProgram& mip, const std::map<int, int>& assignments) {
  std::set<int> binaries(mip.binary_indices.begin(), mip.binary_indices.end());
  MixedIntegerProgram out = mip;
  for (auto [index, value] : assignments) {
    if (!binaries.count(index)) throw std::invalid_argument("fix_binaries: " + std::to_string(index) + " is not a binary variable");
    if (value != 0 && value != 1) throw std::invalid_argument("fix_binaries: value must be 0 or 1");
    out.lp.set_bounds(index, value, value);
  }
  return out;
}

/// The continuous relaxation of `mip` (binaries within their current bounds).
inline LpSolution solve_relaxation(const MixedIntegerProgram& mip, const LpConfig& config = {}) {
  return solve_lp(mip.lp, config);
}

namespace detail {

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInfinity;  // parent's relaxation value
  std::vector<std::pair<double, double>> binary_bounds;
  Basis hint;
  std::string decision;
};

}  // namespace detail

inline MipSolution solve_mip(const MixedIntegerProgram& mip, const MipConfig& config = {}) {
  {
    auto issues = mip.problems();
    if (!issues.empty()) throw std::invalid_argument("malformed MIP: " + issues.front());
    if (!(config.gap_tolerance > 0.0)) throw std::invalid_argument("gap tolerance must be positive");
  }
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  MipSolution out;
  const auto& bins = mip.binary_indices;
  const std::size_t nb = bins.size();
  LinearProgram work = mip.lp;
  std::mt19937_64 rng(config.seed);

  std::vector<detail::Node> open;
  long next_id = 0;
  {
    detail::Node root;
    root.id = next_id++;
    for (int j : bins) root.binary_bounds.emplace_back(mip.lp.lower(j), mip.lp.upper(j));
    root.decision = "root";
    open.push_back(std::move(root));
  }

  double best_bound = -kInfinity;
  auto open_min_bound = [&] {
    double b = kInfinity;
    for (const auto& n : open) b = std::min(b, n.bound);
    return b;
  };
  auto refresh_bound = [&] {
    double b = open.empty() ? out.objective : std::min(open_min_bound(), out.objective);
    if (open.empty() && !out.has_incumbent()) b = kInfinity;
    best_bound = std::max(best_bound, b);
  };
  auto cutoff = [&] { return out.objective - 1e-9 * std::max(1.0, std::abs(out.objective)); };

  bool limit_hit = false;
  while (!open.empty()) {
    if (elapsed() >= config.time_limit || out.nodes >= config.node_limit) {
      limit_hit = true;
      break;
    }
    // Select.
    std::size_t pick = open.size() - 1;
    const bool dive = config.node_selection == NodeSelection::DepthFirst ||
                      (config.node_selection == NodeSelection::DiveThenBestBound && !out.has_incumbent());
    if (!dive) {
      // Bounds within a relative 1e-9 count as equal; among those, go deeper,
      // then newer, so a flat bound plateau is dived rather than swept.
      for (std::size_t i = 0; i < open.size(); ++i) {
        const auto& a = open[i];
        const auto& b = open[pick];
        const double tie = 1e-9 * std::max(1.0, std::abs(b.bound));
        if (a.bound < b.bound - tie) {
          pick = i;
        } else if (a.bound <= b.bound + tie && (a.depth > b.depth || (a.depth == b.depth && a.id > b.id))) {
          pick = i;
        }
      }
    }
    detail::Node node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    if (out.has_incumbent() && node.bound >= cutoff()) {
      refresh_bound();
      continue;
    }

    for (std::size_t k = 0; k < nb; ++k) work.set_bounds(bins[k], node.binary_bounds[k].first, node.binary_bounds[k].second);
    LpSolution rel = node.hint.status.empty() ? solve_lp(work, config.lp) : solve_lp_warm(work, node.hint, config.lp);
    ++out.nodes;
    out.lp_iterations += rel.iterations;
    if (node.id == 0 && rel.status == LpStatus::Optimal) out.root_bound = rel.objective;

    std::string decision;
    if (rel.status == LpStatus::Infeasible) {
      decision = "infeasible";
    } else if (rel.status == LpStatus::Unbounded) {
      throw std::runtime_error("solve_mip: relaxation is unbounded");
    } else if (rel.status == LpStatus::IterationLimit) {
      // Cannot bound this subtree; re-queue with a cold start once, else drop it.
      ++out.lp_failures;
      decision = "lp-failure";
      if (!node.hint.status.empty()) {
        node.hint.status.clear();
        open.push_back(std::move(node));
        refresh_bound();
        continue;
      }
    } else if (out.has_incumbent() && rel.objective >= cutoff()) {
      decision = "pruned";
    } else {
      // Choose a fractional binary.
      int branch = -1;
      double best_score = -1.0;
      std::vector<std::size_t> fractional;
      for (std::size_t k = 0; k < nb; ++k) {
        const double v = rel.primal[bins[k]];
        const double frac = std::abs(v - std::round(v));
        if (frac <= config.integrality_tol) continue;
        fractional.push_back(k);
        if (config.branching == BranchingRule::MostFractional) {
          if (frac > best_score + 1e-12) {
            best_score = frac;
            branch = static_cast<int>(k);
          }
        } else if (config.branching == BranchingRule::FirstFractional && branch < 0) {
          branch = static_cast<int>(k);
        }
      }
      if (config.branching == BranchingRule::Random && !fractional.empty())
        branch = static_cast<int>(fractional[rng() % fractional.size()]);

      if (branch < 0) {
        // Integral within tolerance: round, and re-solve if rounding moved anything.
        std::vector<double> candidate = rel.primal;
        double value = rel.objective;
        bool moved = false;
        for (std::size_t k = 0; k < nb; ++k) {
          const double r = std::round(candidate[bins[k]]);
          if (std::abs(r - candidate[bins[k]]) > 1e-12) moved = true;
          candidate[bins[k]] = r;
        }
        bool accept = true;
        if (moved) {
          LinearProgram fixed = work;
          for (std::size_t k = 0; k < nb; ++k) fixed.set_bounds(bins[k], candidate[bins[k]], candidate[bins[k]]);
          auto check = solve_lp_warm(fixed, rel.basis, config.lp);
          out.lp_iterations += check.iterations;
          accept = check.status == LpStatus::Optimal;
          if (accept) {
            candidate = check.primal;
            value = check.objective;
            for (std::size_t k = 0; k < nb; ++k) candidate[bins[k]] = std::round(candidate[bins[k]]);
          }
        }
        if (accept && value < out.objective) {
          out.objective = value;
          out.incumbent = std::move(candidate);
          decision = "incumbent";
        } else {
          decision = "integral";
        }
      } else {
        // Until something feasible is known, try the relaxation rounded to
        // nearest, then every binary not fixed by branching at its lower bound.
        for (int mode = 0; mode < 2 && !out.has_incumbent() && config.rounding_heuristic; ++mode) {
          LinearProgram fixed = work;
          for (std::size_t k = 0; k < nb; ++k) {
            const double r = mode == 0 ? std::round(rel.primal[bins[k]]) : node.binary_bounds[k].first;
            fixed.set_bounds(bins[k], r, r);
          }
          auto check = solve_lp_warm(fixed, rel.basis, config.lp);
          out.lp_iterations += check.iterations;
          if (check.status == LpStatus::Optimal) {
            out.objective = check.objective;
            out.incumbent = std::move(check.primal);
            for (int j : bins) (*out.incumbent)[j] = std::round((*out.incumbent)[j]);
          }
        }
        const int var = bins[branch];
        const double v = rel.primal[var];
        detail::Node down, up;
        for (auto* child : {&down, &up}) {
          child->id = next_id++;
          child->depth = node.depth + 1;
          child->bound = std::max(node.bound, rel.objective);
          child->binary_bounds = node.binary_bounds;
          child->hint = rel.basis;
        }
        down.binary_bounds[branch] = {0.0, 0.0};
        up.binary_bounds[branch] = {1.0, 1.0};
        down.decision = "x" + std::to_string(var) + "=0";
        up.decision = "x" + std::to_string(var) + "=1";
        // The child pushed last is explored first when diving.
        if (v >= 0.5) {
          open.push_back(std::move(down));
          open.push_back(std::move(up));
        } else {
          open.push_back(std::move(up));
          open.push_back(std::move(down));
        }
        decision = "branch x" + std::to_string(var) + "=" + std::to_string(v);
      }
    }

    refresh_bound();
    if (config.log) {
      *config.log << "node " << node.id << " depth " << node.depth << " bound " << best_bound << " incumbent "
                  << out.objective << " " << node.decision << " -> " << decision << "\n";
    }
    if (out.has_incumbent() && relative_gap(out.objective, best_bound) <= config.gap_tolerance) break;
  }

  refresh_bound();
  out.bound = out.has_incumbent() ? std::min(best_bound, out.objective) : best_bound;
  out.gap = out.has_incumbent() ? relative_gap(out.objective, out.bound) : kInfinity;
  if (limit_hit && !(out.has_incumbent() && out.gap <= config.gap_tolerance))
    out.status = out.has_incumbent() ? MipStatus::FeasibleTimeLimit : MipStatus::NoIncumbentTimeLimit;
  else
    out.status = out.has_incumbent() ? MipStatus::OptimalWithinGap : MipStatus::Infeasible;
  out.wall_time = elapsed();
  return out;
}

}  // namespace otsknn
