#include "joinids/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace joinids {

AttributeSchema::AttributeSchema(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw SchemaError("schema needs at least one attribute");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw SchemaError("empty attribute name");
    if (!seen.insert(n).second) throw SchemaError("duplicate attribute name: " + n);
  }
}

AttributeSchema AttributeSchema::with_letters(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::string n(1, static_cast<char>('A' + j % 26));
    if (j >= 26) n += std::to_string(j / 26);
    names.push_back(std::move(n));
  }
  return AttributeSchema(std::move(names));
}

AttrIndex AttributeSchema::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw SchemaError("unknown attribute: " + name);
  return static_cast<AttrIndex>(it - names_.begin());
}

bool AttributeSchema::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::vector<AttrIndex> IncompleteObject::missing_attributes() const {
  std::vector<AttrIndex> out;
  for (AttrIndex j = 0; j < values.size(); ++j)
    if (!values[j]) out.push_back(j);
  return out;
}

std::size_t IncompleteObject::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& v) { return !v.has_value(); }));
}

void IncompleteObject::validate() const {
  if (values.empty()) throw SchemaError("object has no attributes");
  if (missing_count() == values.size())
    throw SchemaError("object " + std::to_string(timestamp) + " has every attribute missing");
  for (const auto& v : values) {
    if (v && (!(*v >= 0.0) || *v > 1.0))
      throw SchemaError("object " + std::to_string(timestamp) + " has a value outside [0,1]");
  }
}

Mbr Mbr::point(std::span<const double> values) {
  std::vector<Interval> dims;
  dims.reserve(values.size());
  for (double v : values) dims.push_back({v, v});
  return Mbr(std::move(dims));
}

Mbr Mbr::empty(std::size_t d) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return Mbr(std::vector<Interval>(d, Interval{inf, -inf}));
}

void Mbr::expand(std::span<const double> point) {
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    dims_[j].lo = std::min(dims_[j].lo, point[j]);
    dims_[j].hi = std::max(dims_[j].hi, point[j]);
  }
}

void Mbr::expand(const Mbr& other) {
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    dims_[j].lo = std::min(dims_[j].lo, other.dims_[j].lo);
    dims_[j].hi = std::max(dims_[j].hi, other.dims_[j].hi);
  }
}

bool Mbr::contains(std::span<const double> point) const {
  for (std::size_t j = 0; j < dims_.size(); ++j)
    if (!dims_[j].contains(point[j])) return false;
  return true;
}

bool Mbr::contains(const Mbr& other) const {
  if (other.dims_.size() != dims_.size()) return false;
  for (std::size_t j = 0; j < dims_.size(); ++j)
    if (!dims_[j].contains(other.dims_[j])) return false;
  return true;
}

bool Mbr::intersects(const Mbr& other) const {
  for (std::size_t j = 0; j < dims_.size(); ++j)
    if (!dims_[j].intersects(other.dims_[j])) return false;
  return true;
}

bool Mbr::valid() const {
  return std::all_of(dims_.begin(), dims_.end(), [](const Interval& i) { return i.lo <= i.hi; });
}

const char* to_string(ImputationState s) {
  switch (s) {
    case ImputationState::kRange: return "RANGE";
    case ImputationState::kNode: return "NODE";
    case ImputationState::kInstance: return "INSTANCE";
  }
  return "?";
}

ImputedObject ImputedObject::from_complete(const IncompleteObject& obj) {
  if (obj.missing_count() != 0) throw StateError("from_complete called on an incomplete object");
  ImputedObject out;
  out.source = obj;
  out.state = ImputationState::kInstance;
  Instance inst;
  inst.values.reserve(obj.values.size());
  for (const auto& v : obj.values) inst.values.push_back(*v);
  out.mbr = Mbr::point(inst.values);
  out.instances.push_back(std::move(inst));
  return out;
}

std::vector<CandidateValue> normalize_candidates(std::span<const double> raw_values,
                                                 std::size_t max_candidates,
                                                 double merge_tolerance) {
  if (raw_values.empty()) return {};
  std::map<long long, std::pair<double, double>> groups;  // key -> (value, weight)
  for (double v : raw_values) {
    const auto key = static_cast<long long>(std::llround(v / merge_tolerance));
    auto [it, inserted] = groups.try_emplace(key, v, 0.0);
    it->second.second += 1.0;
  }
  std::vector<CandidateValue> out;
  out.reserve(groups.size());
  for (const auto& [key, vw] : groups) out.push_back({vw.first, vw.second});

  if (max_candidates > 0 && out.size() > max_candidates) {
    // Heaviest first; ties keep the smaller value so the result is deterministic.
    std::stable_sort(out.begin(), out.end(), [](const CandidateValue& a, const CandidateValue& b) {
      return a.confidence > b.confidence;
    });
    out.resize(max_candidates);
    std::sort(out.begin(), out.end(),
              [](const CandidateValue& a, const CandidateValue& b) { return a.value < b.value; });
  }
  double total = 0.0;
  for (const auto& c : out) total += c.confidence;
  for (auto& c : out) c.confidence /= total;
  return out;
}

std::vector<Instance> build_instances(const IncompleteObject& source,
                                      std::span<const AttributeCandidates> candidates) {
  const std::size_t d = source.values.size();
  Instance base;
  base.values.assign(d, 0.0);
  for (AttrIndex j = 0; j < d; ++j)
    if (source.values[j]) base.values[j] = *source.values[j];

  std::vector<Instance> out{base};
  for (const auto& attr : candidates) {
    if (attr.candidates.empty()) return {};
    std::vector<Instance> next;
    next.reserve(out.size() * attr.candidates.size());
    for (const auto& inst : out) {
      for (const auto& c : attr.candidates) {
        Instance copy = inst;
        copy.values[attr.attribute] = c.value;
        copy.confidence *= c.confidence;
        next.push_back(std::move(copy));
      }
    }
    out = std::move(next);
  }
  return out;
}

Mbr bounding_box(std::span<const Instance> instances, std::size_t d) {
  Mbr box = Mbr::empty(d);
  for (const auto& inst : instances) box.expand(inst.values);
  return box;
}

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("window capacity must be positive");
}

std::optional<Timestamp> SlidingWindow::newest_timestamp() const { return last_; }

std::optional<ImputedObjectPtr> SlidingWindow::slide(ImputedObjectPtr obj) {
  if (last_ && obj->timestamp() != *last_ + 1) {
    throw OrderingError("window expects timestamp " + std::to_string(*last_ + 1) + ", got " +
                        std::to_string(obj->timestamp()));
  }
  last_ = obj->timestamp();
  entries_.push_back(std::move(obj));
  if (entries_.size() > capacity_) {
    auto expired = std::move(entries_.front());
    entries_.pop_front();
    return expired;
  }
  return std::nullopt;
}

std::optional<ImputedObjectPtr> SlidingWindow::make_room() {
  if (entries_.size() < capacity_) return std::nullopt;
  auto expired = std::move(entries_.front());
  entries_.pop_front();
  return expired;
}

std::vector<PossibleWorld> enumerate_possible_worlds(const SlidingWindow& window, std::size_t cap) {
  std::vector<ImputedObjectPtr> objects(window.entries().begin(), window.entries().end());
  return enumerate_possible_worlds(objects, cap);
}

std::vector<PossibleWorld> enumerate_possible_worlds(std::span<const ImputedObjectPtr> objects,
                                                     std::size_t cap) {
  std::size_t total = 1;
  for (const auto& o : objects) {
    if (o->state != ImputationState::kInstance)
      throw StateError("possible worlds need every object in INSTANCE state");
    const std::size_t n = o->instances.size();
    if (n == 0) throw StateError("object without instances");
    if (total > cap / n) throw CombinatorialBlowup("possible-world count exceeds cap");
    total *= n;
  }
  std::vector<PossibleWorld> worlds;
  worlds.reserve(total);
  std::vector<std::size_t> choice(objects.size(), 0);
  for (std::size_t w = 0; w < total; ++w) {
    double p = 1.0;
    for (std::size_t i = 0; i < objects.size(); ++i) p *= objects[i]->instances[choice[i]].confidence;
    worlds.push_back({choice, p});
    // Mixed-radix increment, last object varies fastest.
    for (std::size_t i = objects.size(); i-- > 0;) {
      if (++choice[i] < objects[i]->instances.size()) break;
      choice[i] = 0;
    }
  }
  return worlds;
}

void JoinSet::add(Timestamp x, Timestamp y, double probability) {
  auto [it, inserted] = pairs_.try_emplace({x, y}, probability);
  if (!inserted) {
    it->second = probability;
    return;
  }
  by_x_[x].push_back(y);
  by_y_[y].push_back(x);
}

bool JoinSet::contains(Timestamp x, Timestamp y) const { return pairs_.count({x, y}) != 0; }

std::optional<double> JoinSet::probability(Timestamp x, Timestamp y) const {
  auto it = pairs_.find({x, y});
  if (it == pairs_.end()) return std::nullopt;
  return it->second;
}

namespace {

void unlink(std::unordered_map<Timestamp, std::vector<Timestamp>>& index, Timestamp key,
            Timestamp value) {
  auto it = index.find(key);
  if (it == index.end()) return;
  auto& v = it->second;
  if (auto pos = std::find(v.begin(), v.end(), value); pos != v.end()) {
    *pos = v.back();
    v.pop_back();
  }
  if (v.empty()) index.erase(it);
}

}  // namespace

bool JoinSet::erase(Timestamp x, Timestamp y) {
  if (pairs_.erase({x, y}) == 0) return false;
  unlink(by_x_, x, y);
  unlink(by_y_, y, x);
  return true;
}

std::vector<JoinPair> JoinSet::remove_endpoint(StreamId stream, Timestamp ts) {
  std::vector<JoinPair> removed;
  const bool first = stream == StreamId::kFirst;
  auto& index = first ? by_x_ : by_y_;
  auto& other_index = first ? by_y_ : by_x_;
  auto it = index.find(ts);
  if (it == index.end()) return removed;
  const std::vector<Timestamp> partners = std::move(it->second);
  index.erase(it);
  removed.reserve(partners.size());
  for (Timestamp other : partners) {
    const Timestamp x = first ? ts : other;
    const Timestamp y = first ? other : ts;
    auto p = pairs_.find({x, y});
    removed.push_back({x, y, p->second});
    pairs_.erase(p);
    unlink(other_index, other, ts);
  }
  std::sort(removed.begin(), removed.end(), [](const JoinPair& a, const JoinPair& b) {
    return std::pair(a.x, a.y) < std::pair(b.x, b.y);
  });
  return removed;
}

std::vector<JoinPair> JoinSet::sorted() const {
  std::vector<JoinPair> out;
  out.reserve(pairs_.size());
  for (const auto& [k, p] : pairs_) out.push_back({k.first, k.second, p});
  std::sort(out.begin(), out.end(), [](const JoinPair& a, const JoinPair& b) {
    return std::pair(a.x, a.y) < std::pair(b.x, b.y);
  });
  return out;
}

void JoinSet::clear() {
  pairs_.clear();
  by_x_.clear();
  by_y_.clear();
}

bool QueryRange::contains(std::span<const double> row) const {
  for (std::size_t k = 0; k < attributes.size(); ++k)
    if (!intervals[k].contains(row[attributes[k]])) return false;
  return true;
}

}  // namespace joinids
