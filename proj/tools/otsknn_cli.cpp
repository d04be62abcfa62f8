// otsknn: command line front end.
//
// Exit codes: 0 ok, 1 usage, 2 input/parse, 3 solver failure, 4 validation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "otsknn/bench.hpp"
#include "otsknn/formulation.hpp"
#include "otsknn/grid.hpp"
#include "otsknn/grid_io.hpp"
#include "otsknn/knn.hpp"
#include "otsknn/training.hpp"

namespace fs = std::filesystem;
using namespace otsknn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kSolver = 3, kInvalid = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_annotation(const std::string& path) { return fs::path(path).replace_extension(".switch").string(); }

/// Native file, or a MATPOWER case (".m") with its switch annotation.
Network load_network(const std::string& path, const std::string& annotation) {
  if (fs::path(path).extension() == ".m")
    return parse_matpower_case(read_file(path), read_file(annotation.empty() ? default_annotation(path) : annotation)).network;
  return load_native(path);
}

std::vector<double> read_demand(const std::string& path, std::size_t buses) {
  std::string text = read_file(path);
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream in(text);
  std::vector<double> d;
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::getline(in, tok);
      continue;
    }
    auto v = detail::to_double(tok);
    if (!v) throw InputError("demand file " + path + ": not a number '" + tok + "'");
    d.push_back(*v);
  }
  if (d.size() != buses)
    throw InputError("demand file " + path + " has " + std::to_string(d.size()) + " values, network has " + std::to_string(buses) + " buses");
  return d;
}

InstanceFamily load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_instances(in);
}

std::string topology_string(const Statuses& s) {
  std::string out;
  for (auto v : s) out.push_back(v ? '1' : '0');
  return out;
}

MethodConfig method_config(double gap, double time_limit) {
  MethodConfig cfg;
  cfg.mip.gap_tolerance = gap;
  cfg.mip.time_limit = time_limit;
  return cfg;
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0)) throw UsageError(std::string(what) + " must be positive");
}

// --- subcommands ----------------------------------------------------------

struct NetworkArgs {
  std::string network, annotation;
  void add(CLI::App* app, bool positional = false) {
    if (positional)
      app->add_option("network", network, "Network file (native, or MATPOWER .m)")->required();
    else
      app->add_option("--network", network, "Network file (native, or MATPOWER .m)")->required();
    app->add_option("--annotation", annotation, "Switch annotation for a MATPOWER case (default: <case>.switch)");
  }
};

int run_validate(const NetworkArgs& a) {
  try {
    auto net = load_network(a.network, a.annotation);
    std::cout << "valid: " << net.bus_count() << " buses, " << net.lines.size() << " lines, " << net.switchable_count()
              << " switchable\n";
    return kOk;
  } catch (const ValidationError& e) {
    std::cout << to_string(e.report());
    return kInvalid;
  }
}

struct SolveArgs {
  NetworkArgs net;
  std::string demand, instances, store, method = "ben";
  std::optional<std::size_t> index;
  std::size_t k = 10;
  double gap = 1e-4, time_limit = 3600.0;
  std::string out;
};

int run_solve(const SolveArgs& a) {
  auto method = parse_method(a.method);
  if (!method) throw UsageError("unknown method '" + a.method + "'");
  if (uses_k(*method) && a.k < 1) throw UsageError("--k must be at least 1");
  check_positive(a.gap, "--gap");
  check_positive(a.time_limit, "--time-limit");
  auto net = load_network(a.net.network, a.net.annotation);

  std::vector<double> demand = net.baseline_demand();
  if (!a.demand.empty()) {
    demand = read_demand(a.demand, net.bus_count());
  } else if (!a.instances.empty()) {
    auto fam = load_instances(a.instances);
    if (fam.network_hash != network_hash(net)) throw InputError("instance file was generated for a different network");
    const std::size_t i = a.index.value_or(0);
    if (i >= fam.demands.size()) throw UsageError("--index beyond the instance file");
    demand = fam.demands[i];
  }

  TrainingStore store;
  if (*method != Method::Ben) {
    if (a.store.empty()) throw UsageError(std::string("method ") + a.method + " needs --store");
    store = load_store(a.store, net);
    if (uses_k(*method) && a.k > store.records.size())
      throw UsageError("--k exceeds the " + std::to_string(store.records.size()) + " stored records");
  }
  auto out = run_method(*method, store.records, net, demand, a.k, method_config(a.gap, a.time_limit));

  std::ostringstream text;
  text << "method " << to_string(*method);
  if (uses_k(*method)) text << " k " << a.k;
  text << "\n";
  if (out.statuses) {
    text << "topology " << topology_string(*out.statuses) << "\n";
    Incidence inc(net);
    text << "open lines";
    for (std::size_t s = 0; s < out.statuses->size(); ++s)
      if (!(*out.statuses)[s]) text << " " << net.lines[inc.switchable[s]].id;
    text << "\n";
  }
  text << "cost " << out.cost << "\n";
  if (out.mip_status) text << "status " << to_string(*out.mip_status) << "\n";
  text << "nodes " << out.nodes << "\n";
  text << "time " << std::setprecision(6) << out.wall_time << "\n";
  std::cout << text.str();
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw InputError("cannot write " + a.out);
    f << text.str();
  }
  if (out.mip_status == MipStatus::NoIncumbentTimeLimit) return kSolver;
  return kOk;
}

struct GenerateArgs {
  NetworkArgs net;
  std::size_t count = 50;
  std::uint64_t seed = 0;
  double perturbation = 0.10;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  if (a.count < 1) throw UsageError("--count must be at least 1");
  if (a.perturbation < 0.0 || a.perturbation > 1.0) throw UsageError("--perturbation must lie in [0, 1]");
  auto net = load_network(a.net.network, a.net.annotation);
  auto fam = generate_instances(net, a.count, a.seed, a.perturbation);
  fam.network_path = a.net.network;
  std::ofstream f(a.out);
  if (!f) throw InputError("cannot write " + a.out);
  write_instances(f, fam);
  std::cerr << "wrote " << fam.demands.size() << " instances to " << a.out << "\n";
  return kOk;
}

struct TrainArgs {
  NetworkArgs net;
  std::string instances, out_store;
  double gap = 1e-4, time_limit = 3600.0;
  std::size_t workers = 1;
};

int run_train(const TrainArgs& a) {
  check_positive(a.gap, "--gap");
  check_positive(a.time_limit, "--time-limit");
  auto net = load_network(a.net.network, a.net.annotation);
  auto fam = load_instances(a.instances);
  if (fam.network_hash != network_hash(net)) throw InputError("instance file was generated for a different network");
  TrainConfig cfg;
  cfg.method = method_config(a.gap, a.time_limit);
  cfg.workers = a.workers;
  cfg.progress = &std::cerr;
  auto store = build_training_store(net, fam, cfg);
  store.network_path = a.net.network;
  save_store(a.out_store, store, net);
  std::cerr << "stored " << store.records.size() << " of " << fam.demands.size() << " instances\n";
  return kOk;
}

struct EvaluateArgs {
  NetworkArgs net;
  std::string store, methods = "ben,knn-d,knn-lp,knn-b,knn-m,knn-bm,knn-bhatm,all-hatm", k_grid = "1,5,10", out_dir, config;
  double gap = 1e-4, mip_gap = 1e-4, time_limit = 3600.0;
  std::size_t workers = 1;
  bool exclude_time_limited = false;
  std::optional<std::size_t> bounds_k;
};

int run_evaluate(EvaluateArgs a, const CLI::App& sub) {
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw InputError("cannot open " + a.config);
    auto c = parse_bench_config(in);
    // Flags given on the command line win over the file.
    auto given = [&](const char* flag) { return sub.count(flag) > 0; };
    if (!given("--network") && !c.network.empty()) a.net.network = c.network;
    if (!given("--methods") && !c.methods.empty()) {
      a.methods.clear();
      for (auto m : c.methods) a.methods += std::string(a.methods.empty() ? "" : ",") + to_string(m);
    }
    if (!given("--k-grid") && !c.k_grid.empty()) {
      a.k_grid.clear();
      for (auto k : c.k_grid) a.k_grid += (a.k_grid.empty() ? "" : ",") + std::to_string(k);
    }
    if (!given("--gap")) a.gap = c.gap;
    if (!given("--mip-gap")) a.mip_gap = c.mip_gap;
    if (!given("--time-limit")) a.time_limit = c.time_limit;
    if (!given("--workers")) a.workers = c.workers;
    if (!given("--exclude-time-limited")) a.exclude_time_limited = c.exclude_time_limited;
  }
  if (a.net.network.empty()) throw UsageError("--network is required (flag or config file)");
  check_positive(a.gap, "--gap");
  check_positive(a.mip_gap, "--mip-gap");
  check_positive(a.time_limit, "--time-limit");
  std::vector<Method> methods;
  std::vector<std::size_t> ks;
  try {
    methods = parse_method_list(a.methods);
    ks = parse_k_list(a.k_grid);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto net = load_network(a.net.network, a.net.annotation);
  auto store = load_store(a.store, net);
  for (auto k : ks)
    if (k > store.records.size() - 1 && store.records.size() >= 1)
      throw UsageError("K=" + std::to_string(k) + " exceeds the " + std::to_string(store.records.size() - 1) +
                       " training records available per instance");

  LooConfig cfg;
  cfg.method = method_config(a.mip_gap, a.time_limit);
  cfg.tolerance = a.gap;
  cfg.workers = a.workers;
  cfg.exclude_time_limited = a.exclude_time_limited;
  cfg.progress = &std::cerr;
  auto report = leave_one_out(store, net, expand_grid(methods, ks), cfg);
  std::optional<std::vector<BoundRow>> bounds;
  if (a.bounds_k) bounds = bound_table(store, net, *a.bounds_k);
  emit_report(report, a.out_dir, bounds ? &*bounds : nullptr);
  std::cerr << "savings: mean " << report.savings.mean_pct << "% over " << report.savings.counted << " instances, "
            << report.savings.excluded_infeasible_all_on << " excluded (all-on infeasible)\n";
  std::cerr << "wrote " << a.out_dir << "\n";
  return kOk;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_report(const std::string& run, const std::string& format, const std::string& table, const std::string& out_path) {
  auto rows = read_csv(fs::path(run) / (table + ".csv"));
  std::ostringstream out;
  if (format == "csv") {
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
  } else if (format == "markdown") {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out << "|";
      for (const auto& c : rows[j]) out << " " << c << " |";
      out << "\n";
      if (j == 0) {
        out << "|";
        for (std::size_t i = 0; i < rows[0].size(); ++i) out << "---|";
        out << "\n";
      }
    }
  } else {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], r[i].size());
      }
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << r[i];
      out << "\n";
    }
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw InputError("cannot write " + out_path);
    f << out.str();
  }
  return kOk;
}

struct BoundsArgs {
  NetworkArgs net;
  std::string store, method = "ben,knn-bm,knn-bhatm", out;
  std::size_t k = 50;
};

int run_bounds(const BoundsArgs& a) {
  std::vector<Method> methods;
  try {
    methods = parse_method_list(a.method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (auto m : methods)
    if (m != Method::Ben && m != Method::KnnBM && m != Method::KnnBhatM)
      throw UsageError("bounds compares ben, knn-bm and knn-bhatm only");
  auto net = load_network(a.net.network, a.net.annotation);
  auto store = load_store(a.store, net);
  if (a.k < 1 || a.k + 1 > store.records.size())
    throw UsageError("--k must lie in [1, " + std::to_string(store.records.size() - 1) + "]");
  auto rows = bound_table(store, net, a.k);
  auto has = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  auto range = [](const Range& r) {
    if (r.empty()) return std::string("-");
    if (r.lo == r.hi) return format_double(r.lo);
    return "[" + format_double(r.lo) + ", " + format_double(r.hi) + "]";
  };
  std::ostringstream out;
  out << "line";
  if (has(Method::Ben)) out << "\tben_lower\tben_upper";
  if (has(Method::KnnBM)) out << "\tbm_lower\tbm_upper\tbm_fixed_on";
  if (has(Method::KnnBhatM)) out << "\tbhatm_lower\tbhatm_upper";
  out << "\n";
  for (const auto& r : rows) {
    out << r.line_id;
    if (has(Method::Ben)) out << "\t" << format_double(r.ben.lower) << "\t" << format_double(r.ben.upper);
    if (has(Method::KnnBM)) out << "\t" << range(r.bm_lower) << "\t" << range(r.bm_upper) << "\t" << r.bm_exact;
    if (has(Method::KnnBhatM)) out << "\t" << range(r.bhatm_lower) << "\t" << range(r.bhatm_upper);
    out << "\n";
  }
  std::cout << out.str();
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw InputError("cannot write " + a.out);
    write_bound_table(f, rows);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DC optimal transmission switching with nearest-neighbor accelerations", "otsknn"};
  app.require_subcommand(1);
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print this help message (all subcommands) and exit");
  app.footer("Exit codes: 0 ok, 1 usage, 2 input/parse error, 3 solver failure, 4 validation failure.");

  NetworkArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Check a network's structural assumptions");
  validate_args.add(validate, true);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve one instance with one method");
  solve_args.net.add(solve);
  auto* demand_opt = solve->add_option("--demand", solve_args.demand, "Demand file: one MW value per bus, in bus order");
  auto* inst_opt = solve->add_option("--instances", solve_args.instances, "Instance file to draw the demand from");
  demand_opt->excludes(inst_opt);
  solve->add_option("--index", solve_args.index, "Instance index within --instances (default 0)")->needs(inst_opt);
  solve->add_option("--method", solve_args.method, "ben, knn-d, knn-lp, knn-b, knn-m, knn-bm, knn-bhatm, all-hatm")
      ->capture_default_str();
  solve->add_option("--k", solve_args.k, "Number of neighbors")->capture_default_str();
  solve->add_option("--store", solve_args.store, "Training store (required by every method except ben)");
  solve->add_option("--gap", solve_args.gap, "Relative optimality gap")->capture_default_str();
  solve->add_option("--time-limit", solve_args.time_limit, "Time limit in seconds")->capture_default_str();
  solve->add_option("--out", solve_args.out, "Also write the result to this file");

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "Sample demand instances around the baseline");
  gen_args.net.add(generate);
  generate->add_option("--count", gen_args.count, "Number of instances")->capture_default_str();
  generate->add_option("--seed", gen_args.seed, "Random seed")->capture_default_str();
  generate->add_option("--perturbation", gen_args.perturbation, "Relative half-width of the uniform range")->capture_default_str();
  generate->add_option("--out", gen_args.out, "Instance file to write")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Solve every instance exactly and write a training store");
  train_args.net.add(train);
  train->add_option("--instances", train_args.instances, "Instance file")->required();
  train->add_option("--out-store", train_args.out_store, "Training store to write")->required();
  train->add_option("--gap", train_args.gap, "Relative optimality gap")->capture_default_str();
  train->add_option("--time-limit", train_args.time_limit, "Time limit per instance in seconds")->capture_default_str();
  train->add_option("--workers", train_args.workers, "Parallel workers")->capture_default_str();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-out evaluation over a training store");
  evaluate->add_option("--network", eval_args.net.network, "Network file (native, or MATPOWER .m)");
  evaluate->add_option("--annotation", eval_args.net.annotation, "Switch annotation for a MATPOWER case");
  evaluate->add_option("--store", eval_args.store, "Training store")->required();
  evaluate->add_option("--methods", eval_args.methods, "Comma-separated methods")->capture_default_str();
  evaluate->add_option("--k-grid", eval_args.k_grid, "Comma-separated K values")->capture_default_str();
  evaluate->add_option("--out-dir", eval_args.out_dir, "Directory for the report files")->required();
  evaluate->add_option("--config", eval_args.config, "Config file (key = value); flags override it");
  evaluate->add_option("--gap", eval_args.gap, "Classification tolerance, relative")->capture_default_str();
  evaluate->add_option("--mip-gap", eval_args.mip_gap, "Relative gap for every MILP solve")->capture_default_str();
  evaluate->add_option("--time-limit", eval_args.time_limit, "Time limit per MILP in seconds")->capture_default_str();
  evaluate->add_option("--workers", eval_args.workers, "Parallel workers over instances")->capture_default_str();
  evaluate->add_flag("--exclude-time-limited", eval_args.exclude_time_limited, "Leave time-limited records out of training");
  evaluate->add_option("--bounds-k", eval_args.bounds_k, "Also write bounds.csv for this K");

  std::string report_run, report_format = "text", report_table = "aggregate", report_out;
  auto* report = app.add_subcommand("report", "Render a table from an evaluate run");
  report->add_option("--run", report_run, "Run directory written by evaluate")->required();
  report->add_option("--format", report_format, "text, markdown or csv")
      ->check(CLI::IsMember({"text", "markdown", "csv"}))
      ->capture_default_str();
  report->add_option("--table", report_table, "aggregate, instances, savings or bounds")
      ->check(CLI::IsMember({"aggregate", "instances", "savings", "bounds"}))
      ->capture_default_str();
  report->add_option("--out", report_out, "Write here instead of standard output");

  BoundsArgs bounds_args;
  auto* bounds = app.add_subcommand("bounds", "Compare big-M bounds per switchable line");
  bounds_args.net.add(bounds);
  bounds->add_option("--store", bounds_args.store, "Training store")->required();
  bounds->add_option("--method", bounds_args.method, "Comma-separated subset of ben, knn-bm, knn-bhatm")->capture_default_str();
  bounds->add_option("--k", bounds_args.k, "Number of neighbors")->capture_default_str();
  bounds->add_option("--out", bounds_args.out, "Also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return run_validate(validate_args);
    if (*solve) return run_solve(solve_args);
    if (*generate) return run_generate(gen_args);
    if (*train) return run_train(train_args);
    if (*evaluate) return run_evaluate(eval_args, *evaluate);
    if (*report) return run_report(report_run, report_format, report_table, report_out);
    if (*bounds) return run_bounds(bounds_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << "run with --help for the full option list\n";
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "validation failed:\n" << to_string(e.report());
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const FileError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const StoreError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
