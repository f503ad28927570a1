#include "joinids/engine.hpp"

#include <algorithm>
#include <map>

namespace joinids {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kJoinIds: return "joinids";
    case Algorithm::kDdGrid: return "dd-grid";
    case Algorithm::kDdNested: return "dd-asp";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "joinids") return Algorithm::kJoinIds;
  if (name == "dd-grid") return Algorithm::kDdGrid;
  if (name == "dd-asp" || name == "dd-nested") return Algorithm::kDdNested;
  throw ConfigError("unknown algorithm '" + name + "' (joinids, dd-grid, dd-asp)");
}

double EngineStats::pruning_power() const {
  if (candidate_pairs == 0) return 0.0;
  return static_cast<double>(lemma1_pruned + lemma3_pruned) / static_cast<double>(candidate_pairs);
}

namespace {

bool by_pair(const JoinPair& a, const JoinPair& b) { return std::pair(a.x, a.y) < std::pair(b.x, b.y); }

JoinPair oriented(const ImputedObject& a, const ImputedObject& b, double p) {
  if (a.id().stream == StreamId::kFirst) return {a.timestamp(), b.timestamp(), p};
  return {b.timestamp(), a.timestamp(), p};
}

}  // namespace

Engine::Engine(std::shared_ptr<const ImputationModel> model, EngineConfig config)
    : model_(std::move(model)),
      config_(config),
      windows_{SlidingWindow(config.window), SlidingWindow(config.window)} {
  if (!model_) throw ConfigError("engine needs an imputation model");
  config_.params.validate();
  if (config_.sample_buckets < 1) throw ConfigError("sample buckets must be positive");
  if (config_.algorithm != Algorithm::kDdNested)
    grid_.emplace(config_.params.epsilon, model_->repository().dimensions());
}

JoinDelta Engine::step(Timestamp t, std::optional<IncompleteObject> x,
                       std::optional<IncompleteObject> y) {
  if (last_t_ && t <= *last_t_) throw OrderingError("engine timestamps must increase");
  if (x && (x->timestamp != t || x->stream != StreamId::kFirst))
    throw OrderingError("stream-1 arrival must carry timestamp " + std::to_string(t));
  if (y && (y->timestamp != t || y->stream != StreamId::kSecond))
    throw OrderingError("stream-2 arrival must carry timestamp " + std::to_string(t));
  for (const auto* o : {x ? &*x : nullptr, y ? &*y : nullptr}) {
    if (!o) continue;
    if (o->dimensions() != model_->repository().dimensions())
      throw SchemaError("object arity differs from the repository");
    const auto& w = windows_[stream_slot(o->stream)];
    if (w.newest_timestamp() && o->timestamp != *w.newest_timestamp() + 1)
      throw OrderingError("stream timestamps must be consecutive");
  }
  last_t_ = t;
  ++stats_.steps;

  JoinDelta delta;
  delta.t = t;
  if (x) expire(StreamId::kFirst, delta);
  if (y) expire(StreamId::kSecond, delta);
  if (x) admit(std::move(*x), delta);
  if (y) admit(std::move(*y), delta);
  std::sort(delta.added.begin(), delta.added.end(), by_pair);
  std::sort(delta.removed.begin(), delta.removed.end(), by_pair);
  return delta;
}

void Engine::expire(StreamId s, JoinDelta& delta) {
  auto old = windows_[stream_slot(s)].make_room();
  if (!old) return;
  if (grid_ && !(*old)->unimputable) grid_->evict(**old);
  histograms_.erase((*old)->id());
  auto gone = js_.remove_endpoint(s, (*old)->timestamp());
  delta.removed.insert(delta.removed.end(), gone.begin(), gone.end());
}

bool Engine::ensure_instances(const ImputedObjectPtr& obj) {
  if (obj->unimputable) return false;
  if (obj->state == ImputationState::kInstance) return true;
  model_->to_instance_state(*obj, &stats_.imputation);
  ++stats_.full_imputations;
  if (obj->unimputable) {
    ++stats_.unimputable;
    return false;
  }
  return true;
}

void Engine::admit(IncompleteObject src, JoinDelta& delta) {
  const StreamId s = src.stream;
  auto obj = std::make_shared<ImputedObject>(model_->range_state(src));

  if (config_.algorithm == Algorithm::kJoinIds) {
    if (obj->state == ImputationState::kRange && model_->to_node_state(*obj, &stats_.imputation))
      ++stats_.node_states;
    const bool has_candidates =
        obj->state == ImputationState::kInstance ||
        grid_->has_candidate(obj->mbr, opposite(s));
    if (has_candidates) {
      ensure_instances(obj);
    } else {
      ++stats_.lazy_inserts;
    }
  } else {
    ensure_instances(obj);
  }

  if (obj->unimputable) {
    delta.unimputable.push_back(obj->id());
  } else if (config_.algorithm == Algorithm::kDdNested) {
    probe_nested(obj, delta);
  } else {
    if (obj->state == ImputationState::kInstance) probe_grid(obj, delta);
    grid_->insert(obj);
  }
  windows_[stream_slot(s)].slide(obj);
}

const Histogram& Engine::histogram_of(const ImputedObject& obj) {
  auto it = histograms_.find(obj.id());
  if (it == histograms_.end())
    it = histograms_.emplace(obj.id(), instance_histogram(obj, config_.sample_buckets)).first;
  return it->second;
}

void Engine::refine(const ImputedObjectPtr& probe, const ImputedObjectPtr& other,
                    const SampleRegion* probe_region, JoinDelta& delta) {
  const auto& p = config_.params;
  if (probe_region) {
    // Same test as sample_level_prune on sample_region_y's box, without
    // materializing that box.
    const SubMbr sy = prefix_sub_mbr(histogram_of(*other), (1.0 - p.alpha) / probe_region->beta);
    if (probe_region->beta * sy.beta > 1.0 - p.alpha &&
        mindist_sq_override(probe_region->box, other->mbr, pivot_attribute(*other), sy.interval) >
            p.epsilon * p.epsilon) {
      ++stats_.lemma3_pruned;
      return;
    }
  }
  ++stats_.refined;
  stats_.instance_pairs += probe->instances.size() * other->instances.size();
  const double prob = join_probability(*probe, *other, p);
  if (prob >= p.alpha) {
    const auto pair = oriented(*probe, *other, prob);
    js_.add(pair.x, pair.y, pair.probability);
    delta.added.push_back(pair);
    ++stats_.joined;
  }
}

void Engine::probe_grid(const ImputedObjectPtr& obj, JoinDelta& delta) {
  const StreamId other_stream = opposite(obj->id().stream);
  stats_.window_pairs += windows_[stream_slot(other_stream)].size();

  // Distinct opposite objects over all candidate cells, in arrival order.
  std::vector<ImputedObject*> found;
  for (const auto& cell : grid_->candidate_cells(obj->mbr, other_stream))
    for (const auto& o : *cell.queue) found.push_back(o.get());
  std::sort(found.begin(), found.end(), [](const ImputedObject* a, const ImputedObject* b) {
    return a->timestamp() < b->timestamp();
  });
  found.erase(std::unique(found.begin(), found.end()), found.end());
  // Window entries own the candidates and stay put while this probe runs.
  std::vector<const ImputedObjectPtr*> candidates;
  candidates.reserve(found.size());
  {
    const auto& w = windows_[stream_slot(other_stream)].entries();
    const Timestamp first = w.empty() ? 0 : w.front()->timestamp();
    for (auto* o : found) candidates.push_back(&w[static_cast<std::size_t>(o->timestamp() - first)]);
  }
  const auto& p = config_.params;
  const SampleRegion region = sample_region_x(*obj, histogram_of(*obj), p);
  for (const auto* ref : candidates) {
    const ImputedObjectPtr& other = *ref;
    ++stats_.candidate_pairs;
    if (object_level_prune(*obj, *other, p)) {
      ++stats_.lemma1_pruned;
      continue;
    }
    if (other->state != ImputationState::kInstance) {
      const Mbr old = other->mbr;
      if (!ensure_instances(other)) {
        grid_->evict(*other);  // box left as it was
        delta.unimputable.push_back(other->id());
        continue;
      }
      grid_->reindex(other, old);
      if (object_level_prune(*obj, *other, p)) {
        ++stats_.lemma1_pruned;
        continue;
      }
    }
    refine(obj, other, &region, delta);
  }
}

void Engine::probe_nested(const ImputedObjectPtr& obj, JoinDelta& delta) {
  const auto& w = windows_[stream_slot(opposite(obj->id().stream))];
  stats_.window_pairs += w.size();
  for (const auto& other : w.entries()) {
    if (other->unimputable) continue;
    refine(obj, other, nullptr, delta);
  }
}

std::vector<ImputedObjectPtr> Engine::grid_members() const {
  std::vector<ImputedObjectPtr> out;
  if (!grid_) return out;
  for (const auto& w : windows_)
    for (const auto& o : w.entries())
      if (!o->unimputable) out.push_back(o);
  return out;
}

JoinSet Engine::recompute_join_set() const {
  JoinSet js;
  for (const auto& a : windows_[0].entries()) {
    if (a->unimputable) continue;
    for (const auto& b : windows_[1].entries()) {
      if (b->unimputable) continue;
      ImputedObject x = *a, y = *b;
      model_->to_instance_state(x);
      model_->to_instance_state(y);
      if (x.unimputable || y.unimputable) continue;
      const double p = join_probability(x, y, config_.params);
      if (p >= config_.params.alpha) js.add(a->timestamp(), b->timestamp(), p);
    }
  }
  return js;
}

std::vector<JoinDelta> run_streams(Engine& engine, const std::vector<IncompleteObject>& s1,
                                   const std::vector<IncompleteObject>& s2) {
  std::map<Timestamp, std::pair<const IncompleteObject*, const IncompleteObject*>> arrivals;
  for (const auto& o : s1) arrivals[o.timestamp].first = &o;
  for (const auto& o : s2) arrivals[o.timestamp].second = &o;
  std::vector<JoinDelta> out;
  out.reserve(arrivals.size());
  for (const auto& [t, pair] : arrivals) {
    std::optional<IncompleteObject> x, y;
    if (pair.first) {
      x = *pair.first;
      x->stream = StreamId::kFirst;
    }
    if (pair.second) {
      y = *pair.second;
      y->stream = StreamId::kSecond;
    }
    out.push_back(engine.step(t, std::move(x), std::move(y)));
  }
  return out;
}

}  // namespace joinids
