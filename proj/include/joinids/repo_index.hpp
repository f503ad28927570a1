#pragma once

// Imputation indexes over the static repository: cluster packing and the
// cluster-selection objective, a bulk-loaded tree whose nodes carry
// equi-depth histograms of the dependent attribute, range queries with a
// node frontier, and sub-MBR selection for sample-level pruning.

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "joinids/core_model.hpp"

namespace joinids {

/// Complete, normalized rows. Values are stored row-major.
class Repository {
 public:
  Repository(AttributeSchema schema, std::vector<double> row_major);

  const AttributeSchema& schema() const { return schema_; }
  std::size_t dimensions() const { return d_; }
  std::size_t size() const { return d_ == 0 ? 0 : data_.size() / d_; }
  bool empty() const { return data_.empty(); }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
  double value(std::size_t i, AttrIndex j) const { return data_[i * d_ + j]; }

  /// Linear scan: rows inside range.
  std::vector<std::uint32_t> scan(const QueryRange& range) const;
  std::size_t count_in(const QueryRange& range) const;
  std::vector<double> centroid() const;

 private:
  AttributeSchema schema_;
  std::size_t d_;
  std::vector<double> data_;
};

struct HistogramBucket {
  Interval interval;
  double count = 0.0;
};

/// Equi-depth histogram with consecutive bucket intervals.
class Histogram {
 public:
  Histogram() = default;

  /// Unit-weight values; at most `buckets` non-empty buckets.
  static Histogram equi_depth(std::vector<double> values, std::size_t buckets);
  /// (value, weight) pairs, e.g. candidate values with confidences.
  static Histogram equi_depth_weighted(std::vector<std::pair<double, double>> items,
                                       std::size_t buckets);

  const std::vector<HistogramBucket>& buckets() const { return buckets_; }
  std::size_t size() const { return buckets_.size(); }
  bool empty() const { return buckets_.empty(); }
  double total() const { return total_; }
  Interval span() const;

 private:
  std::vector<HistogramBucket> buckets_;
  double total_ = 0.0;
};

/// Contiguous bucket run [first, last] of a histogram.
struct SubMbr {
  std::size_t first = 0;
  std::size_t last = 0;
  double beta = 0.0;
  Interval interval;
};

/// Prefix run choice: s_x is the shortest prefix with mass fraction > 1-alpha,
/// greedily extended while (span growth / full span) / mass growth < 1;
/// s_y is the shortest prefix with mass fraction > (1-alpha)/beta_x.
std::pair<SubMbr, SubMbr> select_sub_mbr_pair(const Histogram& hist_x, const Histogram& hist_y,
                                              double alpha);

/// The s_x half of select_sub_mbr_pair.
SubMbr select_sub_mbr_x(const Histogram& hist_x, double alpha);

/// Shortest prefix of `hist` whose mass fraction exceeds `threshold`
/// (the full histogram when none does).
SubMbr prefix_sub_mbr(const Histogram& hist, double threshold);

struct Cluster {
  std::vector<std::uint32_t> rows;
  Mbr box;  // over all attributes; only the key attributes are meaningful
};

using Clustering = std::vector<Cluster>;

/// Sort-tile-recursive packing of the repository on `key_attrs` into
/// clusters of at most leaf_capacity rows and (unless the repository is
/// smaller) at least leaf_capacity/4.
Clustering str_clusters(const Repository& repo, std::span<const AttrIndex> key_attrs,
                        std::size_t leaf_capacity);

/// Value of the cluster-selection objective for one clustering.
double cluster_score(const Repository& repo, const Clustering& clustering,
                     std::span<const QueryRange> sample_queries);

/// Index of the clustering maximizing the objective; ties go to fewer clusters.
/// Throws ConfigError on an empty candidate list.
std::size_t select_clusters(const Repository& repo, std::span<const Clustering> candidates,
                            std::span<const QueryRange> sample_queries);

struct IndexNode {
  Mbr box;
  std::uint32_t count = 0;
  Histogram histogram;
  std::vector<std::uint32_t> children;  // internal nodes
  std::vector<std::uint32_t> rows;      // leaves (one cluster each)
  bool leaf = false;
};

struct FrontierEntry {
  std::uint32_t node = 0;
  bool contained = false;  // whole subtree inside the range
};

/// Nodes touched by a range query without reading leaf rows: maximal nodes
/// fully inside the range plus leaves that only partially intersect it.
struct Frontier {
  std::vector<FrontierEntry> entries;
  std::size_t guaranteed = 0;  // rows certainly inside the range
  Interval dependent_span{1.0, 0.0};
  std::size_t node_tests = 0;

  bool empty() const { return entries.empty(); }
};

struct RangeResult {
  std::vector<std::uint32_t> rows;  // ascending
  Frontier frontier;
};

class ImputationIndex {
 public:
  static constexpr std::size_t kDefaultFanout = 16;

  /// Throws ConfigError when lambda < 1 or the clustering is empty.
  static ImputationIndex build(std::shared_ptr<const Repository> repo,
                               std::vector<AttrIndex> key_attrs, AttrIndex dependent,
                               std::size_t lambda, const Clustering& clustering,
                               std::size_t fanout = kDefaultFanout);

  AttrIndex dependent() const { return dependent_; }
  const std::vector<AttrIndex>& key_attributes() const { return key_attrs_; }
  std::size_t lambda() const { return lambda_; }
  const Repository& repository() const { return *repo_; }
  const std::vector<IndexNode>& nodes() const { return nodes_; }
  const IndexNode& node(std::uint32_t id) const { return nodes_.at(id); }
  std::uint32_t root() const { return root_; }
  std::size_t leaf_count() const { return leaf_count_; }

  /// Range over a subset of the key attributes (others unconstrained).
  RangeResult range_query(const QueryRange& range) const;
  Frontier frontier(const QueryRange& range) const;
  std::size_t count_in(const QueryRange& range) const;

  /// Structural invariants: boxes enclose subtrees, histogram counts sum to
  /// subtree counts, bucket intervals are consecutive and span the subtree's
  /// dependent values. Returns an empty string when everything holds.
  std::string check_invariants() const;

 private:
  void check_range(const QueryRange& range) const;
  void collect_rows(std::uint32_t node, std::vector<std::uint32_t>& out) const;

  std::shared_ptr<const Repository> repo_;
  std::vector<AttrIndex> key_attrs_;
  AttrIndex dependent_ = 0;
  std::size_t lambda_ = 1;
  std::vector<IndexNode> nodes_;
  std::uint32_t root_ = 0;
  std::size_t leaf_count_ = 0;
};

}  // namespace joinids
