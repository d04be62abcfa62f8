#pragma once

// Solved instances used as nearest-neighbor training data, and the
// line-delimited store file that persists them.
//
// Store file: JSON lines.  The first line is a header
//   {"format":"otsknn-store","version":1,"network":<path>,"network_hash":<hex>,
//    "buses":N,"switchable":S,"records":R}
// followed by one object per record:
//   {"demand":[...],"statuses":[...],"angles":[...],"cost":c,"time_limited":bool}

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "otsknn/grid.hpp"
#include "otsknn/grid_io.hpp"

namespace otsknn {

struct TrainingRecord {
  std::vector<double> demand;  // MW per bus
  Statuses statuses;  // per switchable line
  std::vector<double> angles;  // radians per bus
  double cost = 0.0;
  // Stored from a search that stopped on its time limit.
  bool time_limited = false;
};

inline void check_record(const TrainingRecord& r, const Network& net) {
  if (r.demand.size() != net.bus_count() || r.angles.size() != net.bus_count())
    throw std::invalid_argument("training record bus dimension does not match the network");
  if (r.statuses.size() != net.switchable_count())
    throw std::invalid_argument("training record status dimension does not match the network");
  for (auto s : r.statuses)
    if (s > 1) throw std::invalid_argument("training record statuses must be 0 or 1");
}

struct TrainingStore {
  std::string network_path;
  std::string network_hash;
  std::vector<TrainingRecord> records;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_store(std::ostream& out, const TrainingStore& store, const Network& net) {
  nlohmann::json header = {{"format", "otsknn-store"},
                           {"version", 1},
                           {"network", store.network_path},
                           {"network_hash", store.network_hash},
                           {"buses", net.bus_count()},
                           {"switchable", net.switchable_count()},
                           {"records", store.records.size()}};
  out << header.dump() << "\n";
  for (const auto& r : store.records) {
    nlohmann::json j = {{"demand", r.demand},
                        {"statuses", std::vector<int>(r.statuses.begin(), r.statuses.end())},
                        {"angles", r.angles},
                        {"cost", r.cost},
                        {"time_limited", r.time_limited}};
    out << j.dump() << "\n";
  }
}

/// Reads a store and rejects it unless it was built for `net`.
inline TrainingStore read_store(std::istream& in, const Network& net) {
  std::string line;
  if (!std::getline(in, line)) throw StoreError("empty training store");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw StoreError(std::string("bad store header: ") + e.what());
  }
  if (header.value("format", "") != "otsknn-store") throw StoreError("not a training store");
  TrainingStore store;
  store.network_path = header.value("network", "");
  store.network_hash = header.value("network_hash", "");
  const auto expected = network_hash(net);
  if (store.network_hash != expected)
    throw StoreError("training store was built for network hash " + store.network_hash + ", not " + expected);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      TrainingRecord r;
      r.demand = j.at("demand").get<std::vector<double>>();
      for (int s : j.at("statuses").get<std::vector<int>>()) r.statuses.push_back(static_cast<std::uint8_t>(s));
      r.angles = j.at("angles").get<std::vector<double>>();
      r.cost = j.at("cost").get<double>();
      r.time_limited = j.value("time_limited", false);
      check_record(r, net);
      store.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw StoreError("store line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return store;
}

inline void save_store(const std::string& path, const TrainingStore& store, const Network& net) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path);
  write_store(out, store, net);
}

inline TrainingStore load_store(const std::string& path, const Network& net) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path);
  return read_store(in, net);
}

}  // namespace otsknn
