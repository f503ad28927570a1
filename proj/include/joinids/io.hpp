#pragma once

// CSV readers/writers for streams, repositories and groundtruth, the delta
// log, and evaluation metrics over delta logs.

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "joinids/core_model.hpp"
#include "joinids/engine.hpp"

namespace joinids {

struct StreamData {
  AttributeSchema schema;
  std::vector<IncompleteObject> objects;
};

/// Header of attribute names preceded by "timestamp"; '-' marks a missing value.
StreamData read_stream_csv(const std::string& path, StreamId stream);
void write_stream_csv(const std::string& path, const AttributeSchema& schema,
                      const std::vector<IncompleteObject>& objects);

struct RepositoryData {
  AttributeSchema schema;
  std::vector<double> rows;  // row-major
};

RepositoryData read_repository_csv(const std::string& path);
void write_repository_csv(const std::string& path, const AttributeSchema& schema,
                          const std::vector<double>& rows);

using PairSet = std::set<std::pair<Timestamp, Timestamp>>;

/// Header "timestamp_x,timestamp_y".
PairSet read_groundtruth_csv(const std::string& path);
void write_groundtruth_csv(const std::string& path,
                           const std::vector<std::pair<Timestamp, Timestamp>>& pairs);

/// Lines `t,+|-,ts_x,ts_y,probability`.
void write_delta(std::ostream& out, const JoinDelta& delta);
std::vector<JoinDelta> read_delta_log(std::istream& in);
std::vector<JoinDelta> read_delta_log(const std::string& path);

struct Replay {
  JoinSet final_set;
  PairSet ever_added;
  Timestamp last_t = 0;
};

/// Applies the deltas in order. Throws ParseError on removing an absent pair.
Replay replay(const std::vector<JoinDelta>& deltas);

struct Metrics {
  std::size_t returned = 0;
  std::size_t expected = 0;
  std::size_t correct = 0;
  double recall = 0.0;
  double precision = 0.0;  // 0 on empty output
  double f1 = 0.0;
};

Metrics compute_metrics(const PairSet& returned, const PairSet& expected);
double f1_score(double recall, double precision);

/// Groundtruth pairs whose endpoints are both inside the final windows.
PairSet final_window_pairs(const PairSet& pairs, Timestamp last_x, Timestamp last_y,
                           std::size_t window);

}  // namespace joinids
