#include "joinids/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "joinids/prune.hpp"

namespace joinids {

const char* to_string(Family f) {
  switch (f) {
    case Family::kUniform: return "uniform";
    case Family::kCorrelated: return "correlated";
    case Family::kAntiCorrelated: return "anti-correlated";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "uniform") return Family::kUniform;
  if (name == "correlated") return Family::kCorrelated;
  if (name == "anti-correlated" || name == "anticorrelated") return Family::kAntiCorrelated;
  throw ConfigError("unknown distribution '" + name + "'");
}

std::vector<DDRule> family_rules(Family family, std::size_t d) {
  DDRule r;
  switch (family) {
    case Family::kUniform:
      r = {{0, 1, 2}, {0.01, 0.01, 0.01}, 3, 0.01};
      break;
    case Family::kCorrelated:
      r = {{0, 1}, {0.02, 0.02}, 4, 0.05};
      break;
    case Family::kAntiCorrelated:
      r = {{0, 2}, {0.03, 0.03}, 5, 0.1};
      break;
  }
  const AttrIndex needed = std::max(r.dependent, r.determinants.back());
  if (d < r.determinants.back() + 2) throw ConfigError("dimensionality too small for the rule");
  if (needed >= d) r.dependent = d - 1;
  r.validate(d);
  return {r};
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<double> draw_seed(Family family, std::size_t d, double variance, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, std::sqrt(variance));
  // Offset of the anti-correlated plane: the row mean moves by
  // (distance to the plane) / sqrt(d).
  std::normal_distribution<double> plane(0.0, std::sqrt(variance / static_cast<double>(d)));
  std::vector<double> v(d);
  for (int attempt = 0;; ++attempt) {
    if (family == Family::kUniform) {
      for (auto& x : v) x = u(rng);
      return v;
    }
    bool ok = true;
    if (family == Family::kCorrelated) {
      const double c = u(rng);
      for (auto& x : v) {
        x = c + n(rng);
        ok = ok && x >= 0.0 && x <= 1.0;
      }
    } else {
      const double c = 0.5 + plane(rng);
      double mean = 0.0;
      for (auto& x : v) mean += (x = u(rng));
      mean /= static_cast<double>(d);
      for (auto& x : v) {
        x = x - mean + c;
        ok = ok && x >= 0.0 && x <= 1.0;
      }
    }
    if (ok) return v;
    if (attempt > 1000) {
      for (auto& x : v) x = clamp01(x);
      return v;
    }
  }
}

void apply_rules(Family family, const std::vector<DDRule>& rules, std::vector<double>& row) {
  for (const auto& r : rules) {
    double mean = 0.0;
    for (auto a : r.determinants) mean += row[a];
    mean /= static_cast<double>(r.determinants.size());
    row[r.dependent] = clamp01(family == Family::kAntiCorrelated ? 1.0 - mean : mean);
  }
}

}  // namespace

Dataset generate(const GenerateConfig& config, const std::vector<DDRule>& rules) {
  if (config.d == 0) throw ConfigError("d must be positive");
  if (config.seed_count == 0 && config.count > 0) throw ConfigError("seed count must be positive");
  for (const auto& r : rules) r.validate(config.d);
  Dataset out;
  out.schema = AttributeSchema::with_letters(config.d);
  std::mt19937_64 rng(config.rng_seed);
  const std::size_t seeds = std::min(config.seed_count, config.count);
  out.rows.reserve(config.count);
  for (std::size_t i = 0; i < seeds; ++i) {
    auto v = draw_seed(config.family, config.d, config.variance, rng);
    apply_rules(config.family, rules, v);
    out.rows.push_back(std::move(v));
  }

  // Perturbation half-width per attribute: half the tightest determinant
  // epsilon naming it, or half the tightest epsilon overall for the rest.
  double tightest = 0.02;
  std::vector<double> half(config.d, -1.0);
  for (const auto& r : rules)
    for (std::size_t k = 0; k < r.determinants.size(); ++k) {
      const double h = r.determinant_eps[k] / 2.0;
      auto& slot = half[r.determinants[k]];
      slot = slot < 0.0 ? h : std::min(slot, h);
      tightest = std::min(tightest, r.determinant_eps[k]);
    }
  for (auto& h : half)
    if (h < 0.0) h = tightest / 2.0;

  std::uniform_int_distribution<std::size_t> pick(0, seeds == 0 ? 0 : seeds - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = seeds; i < config.count; ++i) {
    std::vector<double> v = out.rows[pick(rng)];
    for (std::size_t j = 0; j < config.d; ++j) v[j] = clamp01(v[j] + half[j] * u(rng));
    apply_rules(config.family, rules, v);
    out.rows.push_back(std::move(v));
  }
  return out;
}

MaskedData mask(const Dataset& data, std::size_t m, const std::vector<AttrIndex>& dependents,
                std::size_t stream_length, std::uint64_t rng_seed) {
  const std::set<AttrIndex> deps(dependents.begin(), dependents.end());
  const std::size_t d = data.schema.size();
  if (m > deps.size()) throw ConfigError("m exceeds the number of dependent attributes");
  if (m >= d) throw ConfigError("m must leave at least one attribute present");
  for (auto a : deps)
    if (a >= d) throw SchemaError("dependent attribute out of range");
  if (2 * stream_length >= data.rows.size())
    throw ConfigError("dataset too small for two streams and a repository");

  std::mt19937_64 rng(rng_seed);
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  MaskedData out;
  out.schema = data.schema;
  const std::vector<AttrIndex> dep_list(deps.begin(), deps.end());
  auto make_stream = [&](std::size_t offset, StreamId sid, std::vector<IncompleteObject>& stream,
                         std::vector<std::vector<double>>& truth) {
    for (std::size_t i = 0; i < stream_length; ++i) {
      const auto& row = data.rows[order[offset + i]];
      truth.push_back(row);
      IncompleteObject o;
      o.timestamp = static_cast<Timestamp>(i + 1);
      o.stream = sid;
      o.values.assign(row.begin(), row.end());
      std::vector<AttrIndex> pool = dep_list;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t k = 0; k < m; ++k) o.values[pool[k]].reset();
      stream.push_back(std::move(o));
    }
  };
  make_stream(0, StreamId::kFirst, out.stream1, out.truth1);
  make_stream(stream_length, StreamId::kSecond, out.stream2, out.truth2);
  for (std::size_t i = 2 * stream_length; i < order.size(); ++i) {
    const auto& row = data.rows[order[i]];
    out.repository.insert(out.repository.end(), row.begin(), row.end());
  }
  out.repository_rows = order.size() - 2 * stream_length;
  return out;
}

RuleReport validate_rule(const DDRule& rule, const std::vector<std::vector<double>>& rows,
                         double violation_tolerance, std::size_t max_anchors,
                         std::uint64_t rng_seed) {
  RuleReport rep;
  if (rows.empty()) return rep;
  rule.validate(rows.front().size());
  const AttrIndex a0 = rule.determinants.front();
  const double e0 = rule.determinant_eps.front();
  std::vector<std::size_t> sorted(rows.size());
  std::iota(sorted.begin(), sorted.end(), 0);
  std::sort(sorted.begin(), sorted.end(),
            [&](std::size_t i, std::size_t j) { return rows[i][a0] < rows[j][a0]; });

  std::vector<std::size_t> anchors(rows.size());
  std::iota(anchors.begin(), anchors.end(), 0);
  if (anchors.size() > max_anchors) {
    std::mt19937_64 rng(rng_seed);
    std::shuffle(anchors.begin(), anchors.end(), rng);
    anchors.resize(max_anchors);
  }
  for (auto i : anchors) {
    const double v = rows[i][a0];
    auto it = std::lower_bound(sorted.begin(), sorted.end(), v - e0,
                               [&](std::size_t r, double x) { return rows[r][a0] < x; });
    for (; it != sorted.end() && rows[*it][a0] <= v + e0; ++it) {
      const std::size_t j = *it;
      if (j == i) continue;
      bool close = true;
      for (std::size_t k = 0; k < rule.determinants.size() && close; ++k)
        close = std::abs(rows[i][rule.determinants[k]] - rows[j][rule.determinants[k]]) <=
                rule.determinant_eps[k];
      if (!close) continue;
      ++rep.pairs_checked;
      if (std::abs(rows[i][rule.dependent] - rows[j][rule.dependent]) > rule.dependent_eps)
        ++rep.violations;
    }
  }
  rep.violation_fraction =
      rep.pairs_checked == 0 ? 0.0 : static_cast<double>(rep.violations) / rep.pairs_checked;
  rep.passed = rep.violation_fraction <= violation_tolerance;
  return rep;
}

std::vector<std::pair<Timestamp, Timestamp>> groundtruth_pairs(
    const std::vector<std::vector<double>>& truth1, const std::vector<std::vector<double>>& truth2,
    double epsilon, std::size_t window) {
  std::vector<std::pair<Timestamp, Timestamp>> out;
  const double eps_sq = epsilon * epsilon;
  const auto w = static_cast<std::int64_t>(window);
  for (std::size_t i = 0; i < truth1.size(); ++i) {
    const auto lo = static_cast<std::int64_t>(i) - w + 1;
    const auto hi = static_cast<std::int64_t>(i) + w - 1;
    for (std::int64_t j = std::max<std::int64_t>(0, lo);
         j <= hi && j < static_cast<std::int64_t>(truth2.size()); ++j)
      if (squared_distance(truth1[i], truth2[static_cast<std::size_t>(j)]) <= eps_sq)
        out.emplace_back(static_cast<Timestamp>(i + 1), static_cast<Timestamp>(j + 1));
  }
  return out;
}

}  // namespace joinids
