#pragma once

// Differential-dependency rules, per-attribute imputation lattices ranked by
// a correlation-fractal-dimension count estimate, rule selection for a given
// incomplete object, and the imputation model that turns incomplete objects
// into probabilistic ones through the repository indexes.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "joinids/core_model.hpp"
#include "joinids/repo_index.hpp"

namespace joinids {

/// X -> A_j with distance constraints [0, eps] on every attribute involved.
struct DDRule {
  std::vector<AttrIndex> determinants;  // ascending, unique
  std::vector<double> determinant_eps;  // parallel to determinants
  AttrIndex dependent = 0;
  double dependent_eps = 0.0;

  double eps_of(AttrIndex attr) const;
  /// Throws SchemaError on an empty or malformed rule.
  void validate(std::size_t d) const;
  bool operator==(const DDRule&) const = default;
};

/// One rule per line: `detA:eps,detB:eps -> dep:eps`. Blank lines and lines
/// starting with '#' are ignored.
std::vector<DDRule> parse_rules(const std::string& text, const AttributeSchema& schema);
std::vector<DDRule> load_rules(const std::string& path, const AttributeSchema& schema);
std::string format_rule(const DDRule& rule, const AttributeSchema& schema);

/// Determinant box of `rule` around `values`, every eps multiplied by scale.
QueryRange make_query_range(const DDRule& rule, std::span<const std::optional<double>> values,
                            double scale = 1.0);
QueryRange make_query_range(const DDRule& rule, std::span<const double> values,
                            double scale = 1.0);

struct FractalEstimate {
  std::vector<AttrIndex> attributes;
  double d2 = 0.0;
  bool degenerate = false;
  std::size_t resolutions = 0;
};

/// Six cell sides in geometric progression from 1/64 to 1/4.
std::vector<double> default_resolutions();

/// Least-squares slope of log(sum p_i^2) against log(r) over the given cell
/// sides. Needs at least 4 resolutions. Identical points give D2 = 0 with
/// the degenerate flag set.
FractalEstimate estimate_fractal_dimension(const Repository& repo,
                                           std::span<const AttrIndex> attributes,
                                           std::span<const double> resolutions);

/// (vol_ratio)^(D2/n) * (n_box - 1) * 2^D2 * eps^D2; 0 when n_box <= 1.
double fractal_count(double vol_ratio, double n_box, double d2, double eps,
                     std::size_t dimensions);

/// Count estimate for a query range using its half-diagonal as eps and the
/// cube of equal half-diagonal as the reference volume; n_box is the number
/// of points in the reference space.
double estimate_count(const QueryRange& range, const FractalEstimate& fractal, double n_box);
/// Same with n_box = |repo|.
double estimate_count(const Repository& repo, const QueryRange& range,
                      const FractalEstimate& fractal);

struct LatticeNode {
  std::vector<std::size_t> members;  // indices into the base rules
  DDRule rule;                       // combined rule
  FractalEstimate fractal;
  double offline_count = 0.0;
};

class ImputationLattice {
 public:
  AttrIndex dependent() const { return dependent_; }
  const std::vector<DDRule>& base_rules() const { return base_; }
  /// levels()[0] is level 1 (the base rules), levels().back() is level l.
  const std::vector<std::vector<LatticeNode>>& levels() const { return levels_; }
  std::size_t level_count() const { return levels_.size(); }
  std::size_t node_count() const;
  const LatticeNode& node(std::size_t level, std::size_t index) const {
    return levels_.at(level - 1).at(index);
  }
  /// Union of all base determinants (the index key attributes).
  std::vector<AttrIndex> key_attributes() const;

  friend ImputationLattice build_lattice(std::span<const DDRule>, const Repository&,
                                         std::span<const double>);

 private:
  AttrIndex dependent_ = 0;
  std::vector<DDRule> base_;
  std::vector<std::vector<LatticeNode>> levels_;
};

/// Builds every combination of the base rules, estimating each node's count
/// offline at the repository centroid and ordering each level by ascending
/// count among nodes with count >= 1, then descending among the rest.
/// Throws SchemaError when the rules do not share one dependent attribute.
ImputationLattice build_lattice(std::span<const DDRule> rules, const Repository& repo,
                                std::span<const double> resolutions = default_resolutions());

struct RuleSelection {
  std::size_t level = 0;  // 1-based
  std::size_t index = 0;
  QueryRange range;
  double estimate = 0.0;
};

/// Walks levels top-down in the precomputed order, skipping nodes that use a
/// missing attribute of obj, and returns the first node whose online count
/// estimate is at least 1.
std::optional<RuleSelection> select_rule(const ImputationLattice& lattice,
                                         const IncompleteObject& obj, double n_box);

struct IndexConfig {
  std::size_t lambda = 10;
  std::vector<std::size_t> leaf_capacities{16, 32, 64};
  std::size_t cluster_samples = 100;
  std::size_t fanout = ImputationIndex::kDefaultFanout;
  std::uint64_t sample_seed = 20200101;
};

struct ImputerConfig {
  std::size_t max_candidates = 16;
  double merge_tolerance = 1e-6;
  int max_widenings = 3;
};

/// Builds the imputation index for one dependent attribute: STR clusterings
/// at each configured leaf capacity, chosen by the cluster-selection
/// objective over sampled (row, rule) query ranges.
ImputationIndex build_index_for_rules(std::shared_ptr<const Repository> repo,
                                      const ImputationLattice& lattice, const IndexConfig& config);

struct ImputationStats {
  std::uint64_t range_queries = 0;
  std::uint64_t frontier_queries = 0;
  std::uint64_t widenings = 0;
  std::uint64_t fallback_nodes = 0;
  std::uint64_t unimputable = 0;
};

/// Offline state (lattices and indexes per dependent attribute) plus the
/// three imputation steps RANGE -> NODE -> INSTANCE.
class ImputationModel {
 public:
  static std::shared_ptr<const ImputationModel> build(std::shared_ptr<const Repository> repo,
                                                      std::vector<DDRule> rules,
                                                      IndexConfig index_config = {},
                                                      ImputerConfig imputer_config = {});

  const Repository& repository() const { return *repo_; }
  const std::vector<DDRule>& rules() const { return rules_; }
  const ImputerConfig& imputer_config() const { return imputer_config_; }
  const ImputationLattice* lattice(AttrIndex dependent) const;
  const ImputationIndex* index(AttrIndex dependent) const;

  /// RANGE state: present values as points, missing attributes span [0,1].
  ImputedObject range_state(const IncompleteObject& obj) const;

  /// RANGE -> NODE using only index-node frontiers. Returns false (leaving
  /// obj untouched) when some attribute has no selected rule or its
  /// frontier does not guarantee a match; such objects go straight to
  /// instances.
  bool to_node_state(ImputedObject& obj, ImputationStats* stats = nullptr) const;

  /// Any state -> INSTANCE (or unimputable after the fallback is exhausted).
  void to_instance_state(ImputedObject& obj, ImputationStats* stats = nullptr) const;

  /// Full imputation of a fresh object.
  ImputedObject impute(const IncompleteObject& obj, ImputationStats* stats = nullptr) const;

  /// Candidate distribution for one missing attribute; empty when the
  /// fallback is exhausted.
  AttributeCandidates impute_attribute(const IncompleteObject& obj, AttrIndex attr,
                                       ImputationStats* stats = nullptr) const;

 private:
  ImputationModel() = default;

  std::shared_ptr<const Repository> repo_;
  std::vector<DDRule> rules_;
  ImputerConfig imputer_config_;
  std::vector<std::optional<ImputationLattice>> lattices_;
  std::vector<std::optional<ImputationIndex>> indexes_;
};

}  // namespace joinids
