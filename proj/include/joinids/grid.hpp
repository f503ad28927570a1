#pragma once

// Sparse grid of epsilon-side cells. Each populated cell keeps one queue per
// stream holding shared references to the imputed objects whose current box
// intersects it.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "joinids/core_model.hpp"

namespace joinids {

using CellKey = std::vector<std::int32_t>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto c : k) h = (h ^ static_cast<std::uint32_t>(c)) * 1099511628211ull;
    return h;
  }
};

struct GridCell {
  std::vector<ImputedObjectPtr> queues[2];

  bool empty() const { return queues[0].empty() && queues[1].empty(); }
};

/// Closed box of a cell: [c*eps, (c+1)*eps] per axis.
Mbr cell_box(const CellKey& key, double epsilon);

/// Per-axis index range [lo, hi] of the cells whose closed box meets `mbr`.
std::vector<std::pair<std::int32_t, std::int32_t>> cell_ranges(const Mbr& mbr, double epsilon);

/// Every cell whose closed box intersects mbr, in lexicographic order.
std::vector<CellKey> cells_for(const Mbr& mbr, double epsilon);

struct CandidateCell {
  const CellKey* key = nullptr;
  const std::vector<ImputedObjectPtr>* queue = nullptr;
};

class EpsilonGrid {
 public:
  EpsilonGrid(double epsilon, std::size_t dimensions);

  double epsilon() const { return epsilon_; }
  std::size_t dimensions() const { return d_; }
  std::size_t cell_count() const { return cells_.size(); }
  const std::unordered_map<CellKey, GridCell, CellKeyHash>& cells() const { return cells_; }

  /// Appends obj to its stream's queue in every cell its box meets.
  void insert(const ImputedObjectPtr& obj);
  /// Drops obj from the cells old_mbr met but its (smaller) box no longer
  /// does. Throws ContainmentError if the box grew.
  void reindex(const ImputedObjectPtr& obj, const Mbr& old_mbr);
  /// Removes every reference to obj; empty cells are deleted.
  void evict(const ImputedObject& obj);

  /// Non-empty queues of `stream` in cells within epsilon of probe.
  std::vector<CandidateCell> candidate_cells(const Mbr& probe, StreamId stream) const;
  /// Whether candidate_cells would return anything.
  bool has_candidate(const Mbr& probe, StreamId stream) const;
  /// Same result by scanning every populated cell (test oracle).
  std::vector<CandidateCell> candidate_cells_exhaustive(const Mbr& probe, StreamId stream) const;

  /// Keys of the cells whose queues reference id.
  std::vector<CellKey> cells_referencing(const ObjectId& id) const;

  /// Empty string when every live object is referenced by exactly
  /// cells_for(its box), nothing else is referenced, and no cell is empty.
  std::string check_integrity(const std::vector<ImputedObjectPtr>& live) const;

 private:
  void remove_from(const CellKey& key, const ObjectId& id);

  double epsilon_;
  std::size_t d_;
  std::unordered_map<CellKey, GridCell, CellKeyHash> cells_;
};

}  // namespace joinids
