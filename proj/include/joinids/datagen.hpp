#pragma once

// Synthetic uniform / correlated / anti-correlated data with rule-consistent
// derived rows, masking into two incomplete streams plus a repository, rule
// validation, and groundtruth join pairs.

#include <cstdint>
#include <string>
#include <vector>

#include "joinids/core_model.hpp"
#include "joinids/dd_engine.hpp"

namespace joinids {

enum class Family { kUniform, kCorrelated, kAntiCorrelated };

const char* to_string(Family f);
/// "uniform", "correlated", "anti-correlated" (also "anticorrelated").
Family parse_family(const std::string& name);

/// The benchmark rule of each family, with the dependent attribute moved to
/// the last attribute when d is too small to hold the original one.
std::vector<DDRule> family_rules(Family family, std::size_t d);

struct Dataset {
  AttributeSchema schema;
  std::vector<std::vector<double>> rows;
};

struct GenerateConfig {
  Family family = Family::kCorrelated;
  std::size_t d = 4;
  std::size_t count = 34000;
  std::size_t seed_count = 5000;
  std::uint64_t rng_seed = 1;
  /// Correlated: variance of each attribute around the diagonal point.
  /// Anti-correlated: variance of the distance to the plane sum = d/2.
  double variance = 0.05;
};

/// Seeds from the family; every further row perturbs a uniformly chosen seed
/// within half of each determinant epsilon and recomputes rule dependents
/// from their determinants (mean, or 1 - mean for anti-correlated data).
Dataset generate(const GenerateConfig& config, const std::vector<DDRule>& rules);

struct MaskedData {
  AttributeSchema schema;
  std::vector<IncompleteObject> stream1, stream2;
  std::vector<std::vector<double>> truth1, truth2;  // pre-mask stream rows
  std::vector<double> repository;                   // row-major
  std::size_t repository_rows = 0;
};

/// Shuffles rows into stream 1, stream 2 (stream_length each) and the
/// repository (the rest). Each stream row loses m attributes drawn uniformly
/// among `dependents`. Throws ConfigError when m exceeds the dependents or
/// the dataset is too small.
MaskedData mask(const Dataset& data, std::size_t m, const std::vector<AttrIndex>& dependents,
                std::size_t stream_length, std::uint64_t rng_seed);

struct RuleReport {
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  bool passed = true;
};

/// Pairs of rows within every determinant constraint, checked on the
/// dependent constraint. At most max_anchors rows are used as anchors.
RuleReport validate_rule(const DDRule& rule, const std::vector<std::vector<double>>& rows,
                         double violation_tolerance, std::size_t max_anchors = 2000,
                         std::uint64_t rng_seed = 7);

/// Pairs (x, y) that share a window at some timestamp (|x - y| < window)
/// and lie within epsilon on the unmasked rows. Rows are timestamped 1..n.
std::vector<std::pair<Timestamp, Timestamp>> groundtruth_pairs(
    const std::vector<std::vector<double>>& truth1, const std::vector<std::vector<double>>& truth2,
    double epsilon, std::size_t window);

}  // namespace joinids
