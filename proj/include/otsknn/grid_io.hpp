#pragma once

// Network file formats.
//
// Native format: one record per text line, fields separated by whitespace,
// `#` starts a comment that runs to the end of the line.
//
//   base <mva>                                   (optional, default 1)
//   bus  <id> <demand-MW> <slack 0|1>
//   gen  <bus-id> <cost> <pmin-MW> <pmax-MW>
//   line <id> <from-bus> <to-bus> <susceptance-pu> <capacity-MW> <switchable 0|1>
//
// Records may appear in any order; line declaration order is preserved and
// defines the order of switchable-line statuses everywhere else.
//
// MATPOWER subset: `mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch` and
// `mpc.gencost` are read.  Susceptance is 1/x, capacity is RATE_A, generator
// cost is the linear coefficient of a polynomial cost.  Switchable branches
// and the slack bus come from a sidecar annotation:
//
//   switchable <branch-row>     (1-based row in mpc.branch)
//   slack <bus-id>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "otsknn/grid.hpp"

namespace otsknn {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        message_(message) {}
  explicit ParseError(const std::string& message) : std::runtime_error(message), message_(message) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_ = 0;
  std::size_t column_ = 0;
  std::string message_;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

namespace detail {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

inline std::vector<Token> split_fields(std::string_view line, std::string_view comment_chars) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (comment_chars.find(line[i]) != std::string_view::npos) break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           comment_chars.find(line[i]) == std::string_view::npos)
      ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  std::string tmp(s);
  if (tmp.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || std::isnan(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

class FieldReader {
 public:
  FieldReader(const std::vector<Token>& tokens, std::size_t line) : tokens_(tokens), line_(line) {}

  double real(std::size_t i, const char* what) const {
    auto v = to_double(tokens_[i].text);
    if (!v) throw ParseError(line_, tokens_[i].column, std::string("expected number for ") + what);
    return *v;
  }
  int integer(std::size_t i, const char* what) const {
    auto v = to_integer(tokens_[i].text);
    if (!v || *v < INT32_MIN || *v > INT32_MAX)
      throw ParseError(line_, tokens_[i].column, std::string("expected integer for ") + what);
    return static_cast<int>(*v);
  }
  bool flag(std::size_t i, const char* what) const {
    const auto t = tokens_[i].text;
    if (t == "0") return false;
    if (t == "1") return true;
    throw ParseError(line_, tokens_[i].column, std::string("expected 0 or 1 for ") + what);
  }

 private:
  const std::vector<Token>& tokens_;
  std::size_t line_;
};

}  // namespace detail

/// Parses and validates a native network document.
inline Network parse_native(std::istream& in) {
  Network net;
  bool seen_base = false;
  std::set<int> bus_ids, line_ids;
  struct Pending {
    std::size_t line, column;
    int bus;
    const char* what;
  };
  std::vector<Pending> references;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto tokens = detail::split_fields(raw, "#");
    if (tokens.empty()) continue;
    detail::FieldReader f(tokens, lineno);
    const auto kw = tokens[0].text;
    auto arity = [&](std::size_t n) {
      if (tokens.size() != n)
        throw ParseError(lineno, tokens[std::min(tokens.size(), n) - 1].column,
                         "'" + std::string(kw) + "' expects " + std::to_string(n - 1) + " fields, got " +
                             std::to_string(tokens.size() - 1));
    };
    if (kw == "base") {
      arity(2);
      if (seen_base) throw ParseError(lineno, tokens[0].column, "duplicate base record");
      net.base_mva = f.real(1, "base");
      if (!(net.base_mva > 0.0)) throw ParseError(lineno, tokens[1].column, "base must be positive");
      seen_base = true;
    } else if (kw == "bus") {
      arity(4);
      Bus b{f.integer(1, "bus id"), f.real(2, "demand"), f.flag(3, "slack flag")};
      if (!bus_ids.insert(b.id).second) throw ParseError(lineno, tokens[1].column, "duplicate bus id " + std::to_string(b.id));
      net.buses.push_back(b);
    } else if (kw == "gen") {
      arity(5);
      Generator g{f.integer(1, "generator bus"), f.real(2, "cost"), f.real(3, "pmin"), f.real(4, "pmax")};
      references.push_back({lineno, tokens[1].column, g.bus, "generator"});
      net.generators.push_back(g);
    } else if (kw == "line") {
      arity(7);
      Line l{f.integer(1, "line id"), f.integer(2, "from bus"), f.integer(3, "to bus"), f.real(4, "susceptance"),
             f.real(5, "capacity"), f.flag(6, "switchable flag")};
      if (!line_ids.insert(l.id).second) throw ParseError(lineno, tokens[1].column, "duplicate line id " + std::to_string(l.id));
      references.push_back({lineno, tokens[2].column, l.from_bus, "line"});
      references.push_back({lineno, tokens[3].column, l.to_bus, "line"});
      net.lines.push_back(l);
    } else {
      throw ParseError(lineno, tokens[0].column, "unknown record '" + std::string(kw) + "'");
    }
  }
  for (const auto& r : references)
    if (!bus_ids.count(r.bus))
      throw ParseError(r.line, r.column, std::string(r.what) + " references unknown bus " + std::to_string(r.bus));
  require_valid(net);
  return net;
}

inline Network parse_native(const std::string& text) {
  std::istringstream in(text);
  return parse_native(in);
}

inline std::string serialize_native(const Network& net) {
  std::ostringstream out;
  out << "base " << format_double(net.base_mva) << "\n";
  for (const auto& b : net.buses) out << "bus " << b.id << ' ' << format_double(b.demand) << ' ' << (b.slack ? 1 : 0) << "\n";
  for (const auto& g : net.generators)
    out << "gen " << g.bus << ' ' << format_double(g.cost) << ' ' << format_double(g.pmin) << ' ' << format_double(g.pmax)
        << "\n";
  for (const auto& l : net.lines)
    out << "line " << l.id << ' ' << l.from_bus << ' ' << l.to_bus << ' ' << format_double(l.susceptance) << ' '
        << format_double(l.capacity) << ' ' << (l.switchable ? 1 : 0) << "\n";
  return out.str();
}

/// FNV-1a over the canonical native serialization, as 16 hex digits.
inline std::string network_hash(const Network& net) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize_native(net)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// A file could not be opened for reading or writing.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Network load_native(const std::string& path) { return parse_native(read_file(path)); }

// ---------------------------------------------------------------------------
// MATPOWER subset

struct MatpowerCase {
  Network network;
  /// Internal bus position -> external MATPOWER bus number.
  std::vector<int> external_bus_ids;
  /// Network line position -> 1-based row in mpc.branch.
  std::vector<std::size_t> branch_rows;
};

namespace detail {

struct MatrixBlock {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;  // source line of each row
};

inline std::size_t line_of(std::string_view text, std::size_t offset) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) n += text[i] == '\n';
  return n;
}

inline std::string strip_matlab_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '\n') in_comment = false;
    if (c == '%') in_comment = true;
    out.push_back(in_comment ? ' ' : c);
  }
  return out;
}

inline std::optional<MatrixBlock> find_matrix(const std::string& text, const std::string& name) {
  const std::string key = "mpc." + name;
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t after = pos + key.size();
    if (after < text.size() && (std::isalnum(static_cast<unsigned char>(text[after])) || text[after] == '_')) {
      pos = after;
      continue;
    }
    std::size_t eq = text.find_first_not_of(" \t", after);
    if (eq == std::string::npos || text[eq] != '=') {
      pos = after;
      continue;
    }
    std::size_t open = text.find_first_not_of(" \t\r\n", eq + 1);
    if (open == std::string::npos || text[open] != '[') return std::nullopt;
    std::size_t close = text.find(']', open);
    if (close == std::string::npos) throw ParseError(line_of(text, open), 1, "unterminated matrix mpc." + name);

    MatrixBlock block;
    std::vector<double> row;
    std::size_t row_line = line_of(text, open);
    std::size_t i = open + 1;
    auto flush = [&] {
      if (!row.empty()) {
        block.rows.push_back(std::move(row));
        block.row_lines.push_back(row_line);
        row.clear();
      }
    };
    std::size_t cur_line = row_line;
    while (i < close) {
      char c = text[i];
      if (c == '\n') {
        ++cur_line;
        flush();
        ++i;
        continue;
      }
      if (c == ';') {
        flush();
        ++i;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < close && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ';' && text[i] != ',') ++i;
      auto v = to_double(std::string_view(text).substr(start, i - start));
      if (!v) throw ParseError(cur_line, 1, "unparseable table row in mpc." + name);
      if (row.empty()) row_line = cur_line;
      row.push_back(*v);
    }
    flush();
    return block;
  }
  return std::nullopt;
}

inline std::optional<double> find_scalar(const std::string& text, const std::string& name) {
  const std::string key = "mpc." + name;
  auto pos = text.find(key);
  if (pos == std::string::npos) return std::nullopt;
  auto eq = text.find('=', pos);
  auto semi = text.find(';', eq);
  if (eq == std::string::npos || semi == std::string::npos) return std::nullopt;
  std::string body = text.substr(eq + 1, semi - eq - 1);
  auto first = body.find_first_not_of(" \t");
  auto last = body.find_last_not_of(" \t");
  if (first == std::string::npos) return std::nullopt;
  return to_double(std::string_view(body).substr(first, last - first + 1));
}

}  // namespace detail

/// Parses a MATPOWER case plus its switchability annotation.  The returned
/// network is validated.
inline MatpowerCase parse_matpower_case(const std::string& case_text, const std::string& annotation_text) {
  const std::string text = detail::strip_matlab_comments(case_text);

  std::set<std::size_t> switchable_rows;
  std::optional<int> slack_bus;
  {
    std::istringstream in(annotation_text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      auto tokens = detail::split_fields(raw, "#%");
      if (tokens.empty()) continue;
      detail::FieldReader f(tokens, lineno);
      if (tokens.size() != 2) throw ParseError(lineno, tokens[0].column, "annotation directive expects one argument");
      if (tokens[0].text == "switchable") {
        int row = f.integer(1, "branch row");
        if (row < 1) throw ParseError(lineno, tokens[1].column, "branch rows are 1-based");
        switchable_rows.insert(static_cast<std::size_t>(row));
      } else if (tokens[0].text == "slack") {
        if (slack_bus) throw ParseError(lineno, tokens[0].column, "duplicate slack directive");
        slack_bus = f.integer(1, "slack bus");
      } else {
        throw ParseError(lineno, tokens[0].column, "unknown annotation directive '" + std::string(tokens[0].text) + "'");
      }
    }
  }
  if (switchable_rows.empty()) throw ParseError("missing annotation for switchable set");

  auto bus = detail::find_matrix(text, "bus");
  auto gen = detail::find_matrix(text, "gen");
  auto branch = detail::find_matrix(text, "branch");
  auto gencost = detail::find_matrix(text, "gencost");
  if (!bus || !gen || !branch) throw ParseError("case must define mpc.bus, mpc.gen and mpc.branch");

  MatpowerCase out;
  Network& net = out.network;
  net.base_mva = detail::find_scalar(text, "baseMVA").value_or(100.0);

  auto require_cols = [](const detail::MatrixBlock& m, std::size_t r, std::size_t n, const char* what) {
    if (m.rows[r].size() < n)
      throw ParseError(m.row_lines[r], 1, std::string("unparseable table row in ") + what + ": expected at least " +
                                              std::to_string(n) + " columns");
  };

  std::optional<int> reference_bus;
  for (std::size_t r = 0; r < bus->rows.size(); ++r) {
    require_cols(*bus, r, 3, "mpc.bus");
    const auto& row = bus->rows[r];
    Bus b{static_cast<int>(row[0]), row[2], false};
    if (static_cast<int>(row[1]) == 3 && !reference_bus) reference_bus = b.id;
    net.buses.push_back(b);
    out.external_bus_ids.push_back(b.id);
  }
  const int slack = slack_bus ? *slack_bus : reference_bus.value_or(INT32_MIN);
  bool slack_found = false;
  for (auto& b : net.buses)
    if (b.id == slack) {
      b.slack = true;
      slack_found = true;
      break;
    }
  if (slack_bus && !slack_found) throw ParseError("annotation names unknown slack bus " + std::to_string(*slack_bus));

  for (std::size_t r = 0; r < gen->rows.size(); ++r) {
    require_cols(*gen, r, 10, "mpc.gen");
    const auto& row = gen->rows[r];
    if (row[7] <= 0) continue;  // out of service
    double cost = 0.0;
    if (gencost) {
      if (r >= gencost->rows.size()) throw ParseError("mpc.gencost has fewer rows than mpc.gen");
      require_cols(*gencost, r, 4, "mpc.gencost");
      const auto& c = gencost->rows[r];
      const int model = static_cast<int>(c[0]);
      const auto ncost = static_cast<std::size_t>(c[3]);
      require_cols(*gencost, r, 4 + (model == 1 ? 2 * ncost : ncost), "mpc.gencost");
      if (model == 2) {
        cost = ncost >= 2 ? c[4 + ncost - 2] : 0.0;
      } else if (model == 1 && ncost >= 2) {
        const double dp = c[6] - c[4];
        cost = dp != 0.0 ? (c[7] - c[5]) / dp : 0.0;
      } else {
        throw ParseError(gencost->row_lines[r], 1, "unsupported gencost model");
      }
    }
    net.generators.push_back({static_cast<int>(row[0]), cost, row[9], row[8]});
  }

  for (std::size_t r = 0; r < branch->rows.size(); ++r) {
    require_cols(*branch, r, 6, "mpc.branch");
    const auto& row = branch->rows[r];
    const std::size_t rownum = r + 1;
    if (row.size() > 10 && row[10] <= 0) {
      if (switchable_rows.count(rownum))
        throw ParseError(branch->row_lines[r], 1, "out-of-service branch " + std::to_string(rownum) + " marked switchable");
      continue;
    }
    if (row[3] == 0.0) throw ParseError(branch->row_lines[r], 1, "branch with zero reactance (row " + std::to_string(rownum) + ")");
    if (row[5] <= 0.0) throw ParseError(branch->row_lines[r], 1, "zero capacity line (branch row " + std::to_string(rownum) + ")");
    net.lines.push_back({static_cast<int>(rownum), static_cast<int>(row[0]), static_cast<int>(row[1]), 1.0 / std::abs(row[3]),
                         row[5], switchable_rows.count(rownum) > 0});
    out.branch_rows.push_back(rownum);
  }
  for (auto row : switchable_rows)
    if (row > branch->rows.size()) throw ParseError("annotation references branch row " + std::to_string(row) + " beyond the table");

  require_valid(net);
  return out;
}

}  // namespace otsknn
