#pragma once

// Streaming join driver: per timestamp, retire expired objects, impute new
// arrivals (lazily for the interleaved algorithm), find candidates through
// the grid, prune, refine and maintain the live join set. The two eager
// baselines share the same contract.

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "joinids/core_model.hpp"
#include "joinids/dd_engine.hpp"
#include "joinids/grid.hpp"
#include "joinids/prune.hpp"

namespace joinids {

enum class Algorithm { kJoinIds, kDdGrid, kDdNested };

const char* to_string(Algorithm a);
/// Accepts "joinids", "dd-grid", "dd-asp" (alias "dd-nested").
Algorithm parse_algorithm(const std::string& name);

struct EngineConfig {
  JoinParams params;
  std::size_t window = 2000;
  Algorithm algorithm = Algorithm::kJoinIds;
  /// Buckets of the instance histograms behind sample-level pruning.
  std::size_t sample_buckets = 10;
};

struct JoinDelta {
  Timestamp t = 0;
  std::vector<JoinPair> added;    // ordered by (x, y)
  std::vector<JoinPair> removed;  // ordered by (x, y)
  std::vector<ObjectId> unimputable;
};

struct EngineStats {
  std::uint64_t steps = 0;
  std::uint64_t window_pairs = 0;     // opposite-window size summed over probes
  std::uint64_t candidate_pairs = 0;  // distinct objects drawn from candidate cells
  std::uint64_t lemma1_pruned = 0;
  std::uint64_t lemma3_pruned = 0;
  std::uint64_t refined = 0;
  std::uint64_t instance_pairs = 0;  // distance tests spent in refinement
  std::uint64_t joined = 0;
  std::uint64_t full_imputations = 0;
  std::uint64_t node_states = 0;
  std::uint64_t lazy_inserts = 0;  // inserted into the grid without instances
  std::uint64_t unimputable = 0;
  ImputationStats imputation;

  /// (lemma1 + lemma3) / candidate pairs; 0 when there were no candidates.
  double pruning_power() const;
};

class Engine {
 public:
  Engine(std::shared_ptr<const ImputationModel> model, EngineConfig config);

  /// Processes timestamp t with at most one arrival per stream. t must
  /// exceed the previous step's t and every arrival must carry timestamp t;
  /// per-stream timestamps must be consecutive.
  JoinDelta step(Timestamp t, std::optional<IncompleteObject> x,
                 std::optional<IncompleteObject> y);

  const EngineConfig& config() const { return config_; }
  const EngineStats& stats() const { return stats_; }
  const JoinSet& join_set() const { return js_; }
  const SlidingWindow& window(StreamId s) const { return windows_[stream_slot(s)]; }
  /// Null for the nested baseline.
  const EpsilonGrid* grid() const { return grid_ ? &*grid_ : nullptr; }
  const ImputationModel& model() const { return *model_; }

  /// Live objects that the grid should reference.
  std::vector<ImputedObjectPtr> grid_members() const;

  /// From-scratch recomputation of the join set over the current windows
  /// using each object's final imputation (test oracle).
  JoinSet recompute_join_set() const;

 private:
  void expire(StreamId s, JoinDelta& delta);
  void admit(IncompleteObject obj, JoinDelta& delta);
  void probe_grid(const ImputedObjectPtr& obj, JoinDelta& delta);
  void probe_nested(const ImputedObjectPtr& obj, JoinDelta& delta);
  bool ensure_instances(const ImputedObjectPtr& obj);
  const Histogram& histogram_of(const ImputedObject& obj);
  void refine(const ImputedObjectPtr& probe, const ImputedObjectPtr& other,
              const SampleRegion* probe_region, JoinDelta& delta);

  std::shared_ptr<const ImputationModel> model_;
  EngineConfig config_;
  SlidingWindow windows_[2];
  std::optional<EpsilonGrid> grid_;
  JoinSet js_;
  EngineStats stats_;
  std::unordered_map<ObjectId, Histogram, ObjectIdHash> histograms_;
  std::optional<Timestamp> last_t_;
};

/// Runs the engine over two aligned streams (stream[i] arrives at the
/// timestamp it carries) and returns one delta per timestamp.
std::vector<JoinDelta> run_streams(Engine& engine, const std::vector<IncompleteObject>& s1,
                                   const std::vector<IncompleteObject>& s2);

}  // namespace joinids
