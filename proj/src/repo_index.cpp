#include "joinids/repo_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace joinids {

Repository::Repository(AttributeSchema schema, std::vector<double> row_major)
    : schema_(std::move(schema)), d_(schema_.size()), data_(std::move(row_major)) {
  if (d_ == 0) throw SchemaError("repository schema is empty");
  if (data_.size() % d_ != 0) throw SchemaError("repository data is not a whole number of rows");
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw SchemaError("repository value outside [0,1] or missing");
  }
}

std::vector<std::uint32_t> Repository::scan(const QueryRange& range) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (range.contains(row(i))) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

std::size_t Repository::count_in(const QueryRange& range) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (range.contains(row(i))) ++n;
  return n;
}

std::vector<double> Repository::centroid() const {
  std::vector<double> c(d_, 0.0);
  if (empty()) return c;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < d_; ++j) c[j] += value(i, j);
  for (double& v : c) v /= static_cast<double>(size());
  return c;
}

// ---------------------------------------------------------------------------
// Histograms

Histogram Histogram::equi_depth(std::vector<double> values, std::size_t buckets) {
  std::vector<std::pair<double, double>> items;
  items.reserve(values.size());
  for (double v : values) items.emplace_back(v, 1.0);
  return equi_depth_weighted(std::move(items), buckets);
}

Histogram Histogram::equi_depth_weighted(std::vector<std::pair<double, double>> items,
                                         std::size_t buckets) {
  if (buckets < 1) throw ConfigError("histogram needs at least one bucket");
  Histogram h;
  if (items.empty()) return h;
  std::sort(items.begin(), items.end());
  double total = 0.0;
  for (const auto& [v, w] : items) total += w;
  h.total_ = total;

  // Bucket of an item = floor(mass before it * buckets / total); empty
  // bucket slots are dropped.
  std::vector<std::size_t> slot(items.size());
  double before = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double pos = before * static_cast<double>(buckets) / total;
    slot[i] = std::min(buckets - 1, static_cast<std::size_t>(std::floor(pos + 1e-12)));
    before += items[i].second;
  }
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    double count = 0.0;
    while (j < items.size() && slot[j] == slot[i]) count += items[j++].second;
    HistogramBucket b;
    b.interval.lo = h.buckets_.empty() ? items[i].first : h.buckets_.back().interval.hi;
    b.interval.hi = j < items.size() ? items[j].first : items.back().first;
    b.count = count;
    h.buckets_.push_back(b);
    i = j;
  }
  return h;
}

Interval Histogram::span() const {
  if (buckets_.empty()) return {1.0, 0.0};
  return {buckets_.front().interval.lo, buckets_.back().interval.hi};
}

SubMbr prefix_sub_mbr(const Histogram& hist, double threshold) {
  SubMbr s;
  if (hist.empty()) return s;
  const auto& b = hist.buckets();
  double mass = 0.0;
  for (std::size_t f = 0; f < b.size(); ++f) {
    mass += b[f].count;
    if (mass / hist.total() > threshold || f + 1 == b.size()) {
      s.first = 0;
      s.last = f;
      s.beta = f + 1 == b.size() ? 1.0 : mass / hist.total();
      s.interval = {b.front().interval.lo, b[f].interval.hi};
      return s;
    }
  }
  return s;
}

SubMbr select_sub_mbr_x(const Histogram& hist_x, double alpha) {
  if (hist_x.empty()) throw ConfigError("sub-MBR selection needs a histogram");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  SubMbr sx = prefix_sub_mbr(hist_x, 1.0 - alpha);
  const auto& b = hist_x.buckets();
  const double full_span = hist_x.span().width();
  while (sx.last + 1 < b.size() && full_span > 0.0) {
    const auto& next = b[sx.last + 1];
    const double d_interval = (next.interval.hi - sx.interval.hi) / full_span;
    const double d_beta = next.count / hist_x.total();
    if (!(d_beta > 0.0) || !(d_interval / d_beta < 1.0)) break;
    ++sx.last;
    sx.interval.hi = next.interval.hi;
    sx.beta = sx.last + 1 == b.size() ? 1.0 : sx.beta + d_beta;
  }
  return sx;
}

std::pair<SubMbr, SubMbr> select_sub_mbr_pair(const Histogram& hist_x, const Histogram& hist_y,
                                              double alpha) {
  if (hist_y.empty()) throw ConfigError("sub-MBR selection needs histograms");
  SubMbr sx = select_sub_mbr_x(hist_x, alpha);
  SubMbr sy = prefix_sub_mbr(hist_y, (1.0 - alpha) / sx.beta);
  return {sx, sy};
}

// ---------------------------------------------------------------------------
// Cluster packing and selection

namespace {

Mbr box_of_rows(const Repository& repo, std::span<const std::uint32_t> rows) {
  Mbr box = Mbr::empty(repo.dimensions());
  for (auto r : rows) box.expand(repo.row(r));
  return box;
}

// Splits [begin, end) into `parts` nearly equal chunks.
std::vector<std::pair<std::size_t, std::size_t>> even_chunks(std::size_t begin, std::size_t end,
                                                             std::size_t parts) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = end - begin;
  parts = std::max<std::size_t>(1, std::min(parts, n));
  for (std::size_t p = 0; p < parts; ++p)
    out.emplace_back(begin + n * p / parts, begin + n * (p + 1) / parts);
  return out;
}

template <class KeyFn>
void str_pack(std::vector<std::uint32_t>& items, std::size_t begin, std::size_t end,
              std::size_t dim, std::size_t dims, std::size_t capacity, const KeyFn& key,
              std::vector<std::vector<std::uint32_t>>& groups) {
  const std::size_t n = end - begin;
  if (n == 0) return;
  std::sort(items.begin() + static_cast<std::ptrdiff_t>(begin),
            items.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::uint32_t a, std::uint32_t b) { return key(a, dim) < key(b, dim); });
  const std::size_t leaves = (n + capacity - 1) / capacity;
  if (dim + 1 == dims || leaves == 1) {
    for (auto [b, e] : even_chunks(begin, end, leaves))
      groups.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(b),
                          items.begin() + static_cast<std::ptrdiff_t>(e));
    return;
  }
  const auto slabs = static_cast<std::size_t>(
      std::ceil(std::pow(static_cast<double>(leaves), 1.0 / static_cast<double>(dims - dim))));
  // Slab sizes are whole multiples of the capacity where possible.
  const std::size_t per_slab = ((leaves + slabs - 1) / slabs) * capacity;
  for (std::size_t b = begin; b < end; b += per_slab) {
    const std::size_t e = std::min(end, b + per_slab);
    str_pack(items, b, e, dim + 1, dims, capacity, key, groups);
  }
}

}  // namespace

Clustering str_clusters(const Repository& repo, std::span<const AttrIndex> key_attrs,
                        std::size_t leaf_capacity) {
  if (leaf_capacity < 1) throw ConfigError("leaf capacity must be positive");
  if (key_attrs.empty()) throw ConfigError("clustering needs key attributes");
  std::vector<std::uint32_t> rows(repo.size());
  std::iota(rows.begin(), rows.end(), 0u);
  std::vector<std::vector<std::uint32_t>> groups;
  auto key = [&](std::uint32_t r, std::size_t dim) { return repo.value(r, key_attrs[dim]); };
  str_pack(rows, 0, rows.size(), 0, key_attrs.size(), leaf_capacity, key, groups);

  // Merge a trailing undersized group of each slab into its neighbour when the
  // result still fits, keeping sizes inside [capacity/4, capacity].
  const std::size_t min_size = std::max<std::size_t>(1, leaf_capacity / 4);
  std::vector<std::vector<std::uint32_t>> merged;
  for (auto& g : groups) {
    if (!merged.empty() && g.size() < min_size && merged.back().size() + g.size() <= leaf_capacity) {
      merged.back().insert(merged.back().end(), g.begin(), g.end());
    } else {
      merged.push_back(std::move(g));
    }
  }
  Clustering out;
  out.reserve(merged.size());
  for (auto& g : merged) {
    Cluster c;
    c.box = box_of_rows(repo, g);
    c.rows = std::move(g);
    out.push_back(std::move(c));
  }
  return out;
}

double cluster_score(const Repository& repo, const Clustering& clustering,
                     std::span<const QueryRange> sample_queries) {
  double score = 0.0;
  for (const auto& q : sample_queries) {
    for (const auto& cls : clustering) {
      bool intersects = true;
      for (std::size_t k = 0; k < q.attributes.size() && intersects; ++k)
        intersects = cls.box[q.attributes[k]].intersects(q.intervals[k]);
      if (!intersects || cls.rows.empty()) continue;  // omega = 0
      std::size_t inside = 0;
      for (auto r : cls.rows)
        if (q.contains(repo.row(r))) ++inside;
      score += static_cast<double>(inside) / static_cast<double>(cls.rows.size());
    }
  }
  return score;
}

std::size_t select_clusters(const Repository& repo, std::span<const Clustering> candidates,
                            std::span<const QueryRange> sample_queries) {
  if (candidates.empty()) throw ConfigError("select_clusters: no candidate clusterings");
  std::size_t best = 0;
  double best_score = cluster_score(repo, candidates[0], sample_queries);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = cluster_score(repo, candidates[i], sample_queries);
    if (s > best_score || (s == best_score && candidates[i].size() < candidates[best].size())) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Index

ImputationIndex ImputationIndex::build(std::shared_ptr<const Repository> repo,
                                       std::vector<AttrIndex> key_attrs, AttrIndex dependent,
                                       std::size_t lambda, const Clustering& clustering,
                                       std::size_t fanout) {
  if (lambda < 1) throw ConfigError("lambda must be >= 1");
  if (fanout < 2) throw ConfigError("fanout must be >= 2");
  if (clustering.empty()) throw ConfigError("index needs at least one cluster");
  if (dependent >= repo->dimensions()) throw SchemaError("dependent attribute out of range");
  for (auto a : key_attrs) {
    if (a >= repo->dimensions()) throw SchemaError("key attribute out of range");
    if (a == dependent) throw SchemaError("dependent attribute cannot be a key attribute");
  }

  ImputationIndex idx;
  idx.repo_ = std::move(repo);
  idx.key_attrs_ = std::move(key_attrs);
  idx.dependent_ = dependent;
  idx.lambda_ = lambda;
  const Repository& r = *idx.repo_;

  auto values_of = [&](const std::vector<std::uint32_t>& rows) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (auto row : rows) v.push_back(r.value(row, dependent));
    return v;
  };

  std::vector<std::uint32_t> level;
  for (const auto& cls : clustering) {
    IndexNode n;
    n.leaf = true;
    n.rows = cls.rows;
    std::sort(n.rows.begin(), n.rows.end());
    n.box = box_of_rows(r, n.rows);
    n.count = static_cast<std::uint32_t>(n.rows.size());
    n.histogram = Histogram::equi_depth(values_of(n.rows), lambda);
    level.push_back(static_cast<std::uint32_t>(idx.nodes_.size()));
    idx.nodes_.push_back(std::move(n));
  }
  idx.leaf_count_ = level.size();

  // Bottom-up STR packing of node boxes (by box centre on the key attributes).
  while (level.size() > 1) {
    std::vector<std::vector<std::uint32_t>> groups;
    auto key = [&](std::uint32_t node, std::size_t dim) {
      const auto& iv = idx.nodes_[node].box[idx.key_attrs_[dim]];
      return iv.lo + iv.hi;
    };
    str_pack(level, 0, level.size(), 0, idx.key_attrs_.size(), fanout, key, groups);
    std::vector<std::uint32_t> next;
    for (auto& g : groups) {
      IndexNode n;
      n.box = Mbr::empty(r.dimensions());
      std::vector<std::uint32_t> rows;
      for (auto c : g) {
        n.box.expand(idx.nodes_[c].box);
        n.count += idx.nodes_[c].count;
        idx.collect_rows(c, rows);
      }
      n.children = std::move(g);
      n.histogram = Histogram::equi_depth(values_of(rows), lambda);
      next.push_back(static_cast<std::uint32_t>(idx.nodes_.size()));
      idx.nodes_.push_back(std::move(n));
    }
    level = std::move(next);
  }
  idx.root_ = level.front();
  return idx;
}

void ImputationIndex::collect_rows(std::uint32_t node, std::vector<std::uint32_t>& out) const {
  const auto& n = nodes_[node];
  if (n.leaf) {
    out.insert(out.end(), n.rows.begin(), n.rows.end());
    return;
  }
  for (auto c : n.children) collect_rows(c, out);
}

void ImputationIndex::check_range(const QueryRange& range) const {
  if (range.attributes.size() != range.intervals.size())
    throw SchemaError("query range arity mismatch");
  for (auto a : range.attributes)
    if (std::find(key_attrs_.begin(), key_attrs_.end(), a) == key_attrs_.end())
      throw SchemaError("query range uses an attribute the index is not keyed on");
}

namespace {

enum class Overlap { kDisjoint, kPartial, kContained };

Overlap classify(const Mbr& box, const QueryRange& range) {
  bool contained = true;
  for (std::size_t k = 0; k < range.attributes.size(); ++k) {
    const auto& iv = box[range.attributes[k]];
    const auto& q = range.intervals[k];
    if (!iv.intersects(q)) return Overlap::kDisjoint;
    if (!q.contains(iv)) contained = false;
  }
  return contained ? Overlap::kContained : Overlap::kPartial;
}

}  // namespace

Frontier ImputationIndex::frontier(const QueryRange& range) const {
  check_range(range);
  Frontier f;
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    const auto& n = nodes_[id];
    ++f.node_tests;
    const auto o = classify(n.box, range);
    if (o == Overlap::kDisjoint) continue;
    if (o == Overlap::kContained || n.leaf) {
      const bool contained = o == Overlap::kContained;
      f.entries.push_back({id, contained});
      if (contained) f.guaranteed += n.count;
      const auto s = n.histogram.span();
      if (f.dependent_span.lo > f.dependent_span.hi) {
        f.dependent_span = s;
      } else {
        f.dependent_span.lo = std::min(f.dependent_span.lo, s.lo);
        f.dependent_span.hi = std::max(f.dependent_span.hi, s.hi);
      }
      continue;
    }
    for (auto c : n.children) stack.push_back(c);
  }
  return f;
}

RangeResult ImputationIndex::range_query(const QueryRange& range) const {
  RangeResult out;
  out.frontier = frontier(range);
  for (const auto& e : out.frontier.entries) {
    if (e.contained) {
      collect_rows(e.node, out.rows);
    } else {
      for (auto row : nodes_[e.node].rows)
        if (range.contains(repo_->row(row))) out.rows.push_back(row);
    }
  }
  std::sort(out.rows.begin(), out.rows.end());
  return out;
}

std::size_t ImputationIndex::count_in(const QueryRange& range) const {
  const Frontier f = frontier(range);
  std::size_t n = f.guaranteed;
  for (const auto& e : f.entries) {
    if (e.contained) continue;
    for (auto row : nodes_[e.node].rows)
      if (range.contains(repo_->row(row))) ++n;
  }
  return n;
}

std::string ImputationIndex::check_invariants() const {
  std::ostringstream err;
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    std::vector<std::uint32_t> rows;
    collect_rows(id, rows);
    if (rows.size() != n.count) err << "node " << id << ": count mismatch\n";
    double lo = 1e300, hi = -1e300;
    for (auto r : rows) {
      if (!n.box.contains(repo_->row(r))) err << "node " << id << ": box misses row " << r << "\n";
      lo = std::min(lo, repo_->value(r, dependent_));
      hi = std::max(hi, repo_->value(r, dependent_));
    }
    const auto& b = n.histogram.buckets();
    double sum = 0.0;
    for (std::size_t f = 0; f < b.size(); ++f) {
      sum += b[f].count;
      if (f + 1 < b.size() && b[f].interval.hi != b[f + 1].interval.lo)
        err << "node " << id << ": buckets " << f << "," << f + 1 << " not consecutive\n";
      if (b[f].interval.lo > b[f].interval.hi) err << "node " << id << ": inverted bucket\n";
    }
    if (sum != static_cast<double>(n.count)) err << "node " << id << ": histogram sum mismatch\n";
    if (!rows.empty()) {
      const auto s = n.histogram.span();
      if (s.lo != lo || s.hi != hi) err << "node " << id << ": histogram span mismatch\n";
    }
    if (b.size() > lambda_) err << "node " << id << ": more than lambda buckets\n";
  }
  return err.str();
}

}  // namespace joinids
