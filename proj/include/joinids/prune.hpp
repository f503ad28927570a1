#pragma once

// Pruning predicates on bounding boxes and sub-boxes, exact join
// probabilities over instance pairs, and the possible-world oracle.

#include <cstddef>
#include <span>

#include "joinids/core_model.hpp"
#include "joinids/repo_index.hpp"

namespace joinids {

struct JoinParams {
  double epsilon = 0.3;
  double alpha = 0.5;

  /// Throws ConfigError unless epsilon > 0 and alpha in (0,1].
  void validate() const;
};

/// Squared minimum distance; the pruning and join tests compare squared
/// values against epsilon^2 so they stay mutually consistent.
double mindist_sq(const Mbr& a, const Mbr& b);
/// Throws SchemaError on a dimension mismatch.
double mindist(const Mbr& a, const Mbr& b);

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double g = a[j] - b[j];
    s += g * g;
  }
  return s;
}

bool object_level_prune(const ImputedObject& x, const ImputedObject& y, const JoinParams& params);
bool sample_level_prune(const Mbr& sx, double beta_x, const Mbr& sy, double beta_y,
                        const JoinParams& params);

/// High-mass sub-box of an imputed object: its box with the pivot attribute
/// narrowed to a prefix run of the instance-weighted histogram.
struct SampleRegion {
  Mbr box;
  double beta = 1.0;
  AttrIndex pivot = 0;
};

/// The attribute sample regions narrow: first missing attribute, else 0.
AttrIndex pivot_attribute(const ImputedObject& obj);

/// mindist_sq(a, b') where b' is b with axis j replaced by bj.
double mindist_sq_override(const Mbr& a, const Mbr& b, AttrIndex j, const Interval& bj);

/// Instance-weighted equi-depth histogram of the object's pivot attribute
/// (its first missing attribute, or attribute 0 when complete).
Histogram instance_histogram(const ImputedObject& obj, std::size_t buckets);

/// Sub-boxes for a pair: s_x from the extended prefix rule, s_y as the
/// shortest prefix with mass above (1-alpha)/beta_x. Both objects must be
/// in INSTANCE state.
std::pair<SampleRegion, SampleRegion> sample_regions(const ImputedObject& x,
                                                     const ImputedObject& y,
                                                     const JoinParams& params,
                                                     std::size_t buckets);
SampleRegion sample_region_x(const ImputedObject& x, const JoinParams& params,
                             std::size_t buckets);
SampleRegion sample_region_y(const ImputedObject& y, double beta_x, const JoinParams& params,
                             std::size_t buckets);
/// Same, reusing a histogram built by instance_histogram.
SampleRegion sample_region_x(const ImputedObject& x, const Histogram& hist_x,
                             const JoinParams& params);
SampleRegion sample_region_y(const ImputedObject& y, const Histogram& hist_y, double beta_x,
                             const JoinParams& params);

/// Sum over instance pairs of p_x * p_y * [dist <= epsilon]. The stream-1
/// object is always the outer loop, so swapping the arguments of a
/// cross-stream pair gives a bit-identical result.
double join_probability(const ImputedObject& x, const ImputedObject& y, const JoinParams& params);

/// Test oracle: full enumeration of the possible worlds of both windows.
/// x and y must be members of w1 and w2.
double join_probability_oracle(const ImputedObject& x, const ImputedObject& y,
                               std::span<const ImputedObjectPtr> w1,
                               std::span<const ImputedObjectPtr> w2, const JoinParams& params,
                               std::size_t cap = kDefaultWorldCap);

}  // namespace joinids
