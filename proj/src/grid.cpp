#include "joinids/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "joinids/prune.hpp"

namespace joinids {

Mbr cell_box(const CellKey& key, double epsilon) {
  std::vector<Interval> dims;
  dims.reserve(key.size());
  for (auto c : key) dims.push_back({c * epsilon, (c + 1) * epsilon});
  return Mbr(std::move(dims));
}

std::vector<std::pair<std::int32_t, std::int32_t>> cell_ranges(const Mbr& mbr, double epsilon) {
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  out.reserve(mbr.dimensions());
  for (std::size_t j = 0; j < mbr.dimensions(); ++j) {
    const double lo = mbr[j].lo, hi = mbr[j].hi;
    auto a = static_cast<std::int32_t>(std::floor(lo / epsilon));
    auto b = static_cast<std::int32_t>(std::floor(hi / epsilon));
    // Settle against the exact closed-box test used by cell_box.
    while (a * epsilon >= lo) --a;
    while ((a + 1) * epsilon < lo) ++a;
    while ((b + 1) * epsilon <= hi) ++b;
    while (b * epsilon > hi) --b;
    out.emplace_back(a, b);
  }
  return out;
}

namespace {

template <class Fn>
void for_each_key(const std::vector<std::pair<std::int32_t, std::int32_t>>& ranges, Fn&& fn) {
  if (ranges.empty()) return;
  for (const auto& [a, b] : ranges)
    if (a > b) return;
  CellKey key(ranges.size());
  for (std::size_t j = 0; j < ranges.size(); ++j) key[j] = ranges[j].first;
  while (true) {
    fn(key);
    std::size_t j = ranges.size();
    while (j-- > 0) {
      if (++key[j] <= ranges[j].second) break;
      key[j] = ranges[j].first;
    }
    if (j == static_cast<std::size_t>(-1)) return;
  }
}

// Squared gap between cell `key` and probe, without building the cell box.
double cell_mindist_sq(const CellKey& key, const Mbr& probe, double epsilon) {
  double s = 0.0;
  for (std::size_t j = 0; j < key.size(); ++j) {
    const double lo = key[j] * epsilon, hi = (key[j] + 1) * epsilon;
    const double g = std::max({0.0, lo - probe[j].hi, probe[j].lo - hi});
    s += g * g;
  }
  return s;
}

std::size_t block_size(const std::vector<std::pair<std::int32_t, std::int32_t>>& ranges) {
  std::size_t n = 1;
  for (const auto& [a, b] : ranges) {
    const auto len = static_cast<std::size_t>(b - a + 1);
    if (n > (std::size_t{1} << 40) / len) return std::size_t{1} << 40;
    n *= len;
  }
  return n;
}

}  // namespace

std::vector<CellKey> cells_for(const Mbr& mbr, double epsilon) {
  std::vector<CellKey> out;
  for_each_key(cell_ranges(mbr, epsilon), [&](const CellKey& k) { out.push_back(k); });
  return out;
}

EpsilonGrid::EpsilonGrid(double epsilon, std::size_t dimensions) : epsilon_(epsilon), d_(dimensions) {
  if (!(epsilon > 0.0)) throw ConfigError("grid epsilon must be positive");
  if (dimensions == 0) throw ConfigError("grid needs at least one dimension");
}

void EpsilonGrid::insert(const ImputedObjectPtr& obj) {
  if (obj->mbr.dimensions() != d_) throw SchemaError("object arity differs from grid");
  const auto slot = stream_slot(obj->id().stream);
  for_each_key(cell_ranges(obj->mbr, epsilon_),
               [&](const CellKey& k) { cells_[k].queues[slot].push_back(obj); });
}

void EpsilonGrid::remove_from(const CellKey& key, const ObjectId& id) {
  auto it = cells_.find(key);
  if (it == cells_.end()) return;
  auto& q = it->second.queues[stream_slot(id.stream)];
  q.erase(std::remove_if(q.begin(), q.end(), [&](const ImputedObjectPtr& p) { return p->id() == id; }),
          q.end());
  if (it->second.empty()) cells_.erase(it);
}

void EpsilonGrid::reindex(const ImputedObjectPtr& obj, const Mbr& old_mbr) {
  if (!old_mbr.contains(obj->mbr)) throw ContainmentError("reindex would grow the object's box");
  const auto now = cell_ranges(obj->mbr, epsilon_);
  const auto before = cell_ranges(old_mbr, epsilon_);
  if (now == before) return;
  for_each_key(before, [&](const CellKey& k) {
    for (std::size_t j = 0; j < k.size(); ++j)
      if (k[j] < now[j].first || k[j] > now[j].second) {
        remove_from(k, obj->id());
        return;
      }
  });
}

void EpsilonGrid::evict(const ImputedObject& obj) {
  for_each_key(cell_ranges(obj.mbr, epsilon_), [&](const CellKey& k) { remove_from(k, obj.id()); });
}

std::vector<CandidateCell> EpsilonGrid::candidate_cells(const Mbr& probe, StreamId stream) const {
  std::vector<CandidateCell> out;
  const double eps_sq = epsilon_ * epsilon_;
  const auto slot = stream_slot(stream);
  Mbr grown = probe;
  for (std::size_t j = 0; j < d_; ++j) {
    grown[j].lo -= epsilon_;
    grown[j].hi += epsilon_;
  }
  const auto ranges = cell_ranges(grown, epsilon_);
  if (block_size(ranges) > cells_.size()) return candidate_cells_exhaustive(probe, stream);
  for_each_key(ranges, [&](const CellKey& k) {
    auto it = cells_.find(k);
    if (it == cells_.end() || it->second.queues[slot].empty()) return;
    if (cell_mindist_sq(k, probe, epsilon_) <= eps_sq)
      out.push_back({&it->first, &it->second.queues[slot]});
  });
  return out;
}

bool EpsilonGrid::has_candidate(const Mbr& probe, StreamId stream) const {
  const double eps_sq = epsilon_ * epsilon_;
  const auto slot = stream_slot(stream);
  for (const auto& [k, cell] : cells_)
    if (!cell.queues[slot].empty() && cell_mindist_sq(k, probe, epsilon_) <= eps_sq) return true;
  return false;
}

std::vector<CandidateCell> EpsilonGrid::candidate_cells_exhaustive(const Mbr& probe,
                                                                   StreamId stream) const {
  std::vector<CandidateCell> out;
  const double eps_sq = epsilon_ * epsilon_;
  const auto slot = stream_slot(stream);
  for (const auto& [k, cell] : cells_) {
    if (cell.queues[slot].empty()) continue;
    if (cell_mindist_sq(k, probe, epsilon_) <= eps_sq) out.push_back({&k, &cell.queues[slot]});
  }
  std::sort(out.begin(), out.end(),
            [](const CandidateCell& a, const CandidateCell& b) { return *a.key < *b.key; });
  return out;
}

std::vector<CellKey> EpsilonGrid::cells_referencing(const ObjectId& id) const {
  std::vector<CellKey> out;
  for (const auto& [k, cell] : cells_)
    for (const auto& p : cell.queues[stream_slot(id.stream)])
      if (p->id() == id) {
        out.push_back(k);
        break;
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::string EpsilonGrid::check_integrity(const std::vector<ImputedObjectPtr>& live) const {
  std::map<ObjectId, std::vector<CellKey>> seen;
  for (const auto& [k, cell] : cells_) {
    if (cell.empty()) return "empty cell kept in the grid";
    for (const auto& q : cell.queues) {
      std::set<ObjectId> in_cell;
      for (const auto& p : q) {
        if (!in_cell.insert(p->id()).second) return "object referenced twice by one cell";
        seen[p->id()].push_back(k);
      }
    }
  }
  for (const auto& obj : live) {
    auto expected = cells_for(obj->mbr, epsilon_);
    auto it = seen.find(obj->id());
    std::vector<CellKey> actual;
    if (it != seen.end()) {
      actual = std::move(it->second);
      seen.erase(it);
    }
    std::sort(actual.begin(), actual.end());
    if (actual != expected)
      return "object " + std::to_string(obj->timestamp()) + " on stream " +
             std::to_string(stream_slot(obj->id().stream) + 1) + " has stale cell references";
  }
  if (!seen.empty())
    return "grid references object " + std::to_string(seen.begin()->first.timestamp) +
           " that is not live";
  return {};
}

}  // namespace joinids
