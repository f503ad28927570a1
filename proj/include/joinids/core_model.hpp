#pragma once

// Domain types shared by the whole pipeline: schemas, incomplete and imputed
// objects, bounding boxes, count-based sliding windows and the join set.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "joinids/errors.hpp"

namespace joinids {

using AttrIndex = std::size_t;
using Timestamp = std::int64_t;

class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<std::string> names);

  /// Default names A, B, C, ... (A1, B1, ... past Z).
  static AttributeSchema with_letters(std::size_t d);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(AttrIndex j) const { return names_.at(j); }
  AttrIndex index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  bool operator==(const AttributeSchema& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
};

enum class StreamId : std::uint8_t { kFirst = 0, kSecond = 1 };

inline StreamId opposite(StreamId s) {
  return s == StreamId::kFirst ? StreamId::kSecond : StreamId::kFirst;
}
inline std::size_t stream_slot(StreamId s) { return static_cast<std::size_t>(s); }

/// Object identity: (stream, arrival timestamp).
struct ObjectId {
  StreamId stream = StreamId::kFirst;
  Timestamp timestamp = 0;

  bool operator==(const ObjectId&) const = default;
  auto operator<=>(const ObjectId&) const = default;
};

struct ObjectIdHash {
  std::size_t operator()(const ObjectId& id) const noexcept {
    return std::hash<std::int64_t>{}(id.timestamp * 2 + static_cast<std::int64_t>(id.stream));
  }
};

struct IncompleteObject {
  Timestamp timestamp = 0;
  StreamId stream = StreamId::kFirst;
  std::vector<std::optional<double>> values;

  ObjectId id() const { return {stream, timestamp}; }
  std::size_t dimensions() const { return values.size(); }
  bool is_missing(AttrIndex j) const { return !values.at(j).has_value(); }
  std::vector<AttrIndex> missing_attributes() const;
  std::size_t missing_count() const;

  /// Throws SchemaError when every value is missing or a value leaves [0,1].
  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Axis-aligned closed box, one interval per attribute.
class Mbr {
 public:
  Mbr() = default;
  explicit Mbr(std::vector<Interval> dims) : dims_(std::move(dims)) {}

  static Mbr point(std::span<const double> values);
  /// Box that contains nothing yet; expand() grows it.
  static Mbr empty(std::size_t d);

  std::size_t dimensions() const { return dims_.size(); }
  const Interval& operator[](std::size_t j) const { return dims_[j]; }
  Interval& operator[](std::size_t j) { return dims_[j]; }
  const std::vector<Interval>& intervals() const { return dims_; }

  void expand(std::span<const double> point);
  void expand(const Mbr& other);
  bool contains(std::span<const double> point) const;
  bool contains(const Mbr& other) const;
  bool intersects(const Mbr& other) const;
  /// lo <= hi on every axis.
  bool valid() const;

  bool operator==(const Mbr&) const = default;

 private:
  std::vector<Interval> dims_;
};

struct CandidateValue {
  double value = 0.0;
  double confidence = 0.0;
};

/// Candidate distribution of one missing attribute.
struct AttributeCandidates {
  AttrIndex attribute = 0;
  std::vector<CandidateValue> candidates;
};

struct Instance {
  std::vector<double> values;
  double confidence = 1.0;
};

enum class ImputationState : std::uint8_t { kRange, kNode, kInstance };

const char* to_string(ImputationState s);

/// Reference to an imputation-index node touched while building a NODE box.
struct NodeRef {
  AttrIndex attribute = 0;
  std::uint32_t node = 0;
};

struct ImputedObject {
  IncompleteObject source;
  ImputationState state = ImputationState::kRange;
  Mbr mbr;
  std::vector<Instance> instances;
  std::vector<AttributeCandidates> candidates;
  std::vector<NodeRef> node_refs;
  bool unimputable = false;

  ObjectId id() const { return source.id(); }
  Timestamp timestamp() const { return source.timestamp; }

  /// Complete object: a single instance with confidence 1.
  static ImputedObject from_complete(const IncompleteObject& obj);
};

using ImputedObjectPtr = std::shared_ptr<ImputedObject>;

/// Merges values equal after rounding to merge_tolerance (summing their
/// weight), keeps the max_candidates heaviest and renormalizes to sum 1.
std::vector<CandidateValue> normalize_candidates(std::span<const double> raw_values,
                                                 std::size_t max_candidates,
                                                 double merge_tolerance = 1e-6);

/// Cross product of the per-attribute candidate lists with the object's
/// present values; confidences are products of per-attribute confidences.
std::vector<Instance> build_instances(const IncompleteObject& source,
                                      std::span<const AttributeCandidates> candidates);

Mbr bounding_box(std::span<const Instance> instances, std::size_t d);

/// Count-based window over one stream holding the most recent w objects.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  /// Appends obj; returns the evicted oldest entry once the window is full.
  /// Throws OrderingError unless obj's timestamp is newest + 1.
  std::optional<ImputedObjectPtr> slide(ImputedObjectPtr obj);
  /// Pops the oldest entry when the window is full, so that the next slide
  /// expires nothing. Lets callers retire an object before admitting its
  /// successor.
  std::optional<ImputedObjectPtr> make_room();

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<ImputedObjectPtr>& entries() const { return entries_; }
  std::optional<Timestamp> newest_timestamp() const;

 private:
  std::size_t capacity_;
  std::deque<ImputedObjectPtr> entries_;
  std::optional<Timestamp> last_;
};

inline std::optional<ImputedObjectPtr> window_slide(SlidingWindow& window, ImputedObjectPtr obj) {
  return window.slide(std::move(obj));
}

struct PossibleWorld {
  std::vector<std::size_t> choice;  // instance index per window entry
  double probability = 0.0;
};

inline constexpr std::size_t kDefaultWorldCap = 1'000'000;

/// Test oracle: materializes every possible world of a window whose objects
/// are all in INSTANCE state.
std::vector<PossibleWorld> enumerate_possible_worlds(const SlidingWindow& window,
                                                     std::size_t cap = kDefaultWorldCap);
std::vector<PossibleWorld> enumerate_possible_worlds(std::span<const ImputedObjectPtr> objects,
                                                     std::size_t cap = kDefaultWorldCap);

struct JoinPair {
  Timestamp x = 0;  // timestamp in stream 1
  Timestamp y = 0;  // timestamp in stream 2
  double probability = 0.0;

  bool operator==(const JoinPair&) const = default;
};

/// Live join results keyed by (stream-1 timestamp, stream-2 timestamp).
class JoinSet {
 public:
  void add(Timestamp x, Timestamp y, double probability);
  bool contains(Timestamp x, Timestamp y) const;
  std::optional<double> probability(Timestamp x, Timestamp y) const;
  bool erase(Timestamp x, Timestamp y);
  /// Removes every pair with the given endpoint, returning them.
  std::vector<JoinPair> remove_endpoint(StreamId stream, Timestamp ts);
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  /// Pairs ordered by (x, y).
  std::vector<JoinPair> sorted() const;
  void clear();

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<Timestamp, Timestamp>& k) const noexcept {
      return std::hash<std::int64_t>{}(k.first * 1'000'003 ^ k.second);
    }
  };
  std::unordered_map<std::pair<Timestamp, Timestamp>, double, KeyHash> pairs_;
  std::unordered_map<Timestamp, std::vector<Timestamp>> by_x_;
  std::unordered_map<Timestamp, std::vector<Timestamp>> by_y_;
};

/// Box over a subset of attributes, e.g. the determinant range of a DD rule.
struct QueryRange {
  std::vector<AttrIndex> attributes;
  std::vector<Interval> intervals;

  std::size_t dimensions() const { return attributes.size(); }
  bool contains(std::span<const double> row) const;
};

}  // namespace joinids
