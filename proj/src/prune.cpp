#include "joinids/prune.hpp"

#include <algorithm>
#include <cmath>

namespace joinids {

void JoinParams::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
}

double mindist_sq(const Mbr& a, const Mbr& b) {
  if (a.dimensions() != b.dimensions()) throw SchemaError("mindist on boxes of different arity");
  double s = 0.0;
  for (std::size_t j = 0; j < a.dimensions(); ++j) {
    const double g = std::max({0.0, a[j].lo - b[j].hi, b[j].lo - a[j].hi});
    s += g * g;
  }
  return s;
}

double mindist(const Mbr& a, const Mbr& b) { return std::sqrt(mindist_sq(a, b)); }

bool object_level_prune(const ImputedObject& x, const ImputedObject& y, const JoinParams& params) {
  return mindist_sq(x.mbr, y.mbr) > params.epsilon * params.epsilon;
}

bool sample_level_prune(const Mbr& sx, double beta_x, const Mbr& sy, double beta_y,
                        const JoinParams& params) {
  return mindist_sq(sx, sy) > params.epsilon * params.epsilon &&
         beta_x * beta_y > 1.0 - params.alpha;
}

AttrIndex pivot_attribute(const ImputedObject& obj) {
  for (AttrIndex j = 0; j < obj.source.values.size(); ++j)
    if (!obj.source.values[j]) return j;
  return 0;
}

double mindist_sq_override(const Mbr& a, const Mbr& b, AttrIndex j, const Interval& bj) {
  if (a.dimensions() != b.dimensions()) throw SchemaError("mindist on boxes of different arity");
  double s = 0.0;
  for (std::size_t k = 0; k < a.dimensions(); ++k) {
    const Interval& ib = k == j ? bj : b[k];
    const double g = std::max({0.0, a[k].lo - ib.hi, ib.lo - a[k].hi});
    s += g * g;
  }
  return s;
}

namespace {

AttrIndex pivot_of(const ImputedObject& obj) { return pivot_attribute(obj); }

void require_instances(const ImputedObject& obj) {
  if (obj.state != ImputationState::kInstance || obj.unimputable)
    throw StateError("operation needs an object in INSTANCE state");
}

SampleRegion region_from(const ImputedObject& obj, AttrIndex pivot, const SubMbr& s) {
  SampleRegion r;
  r.box = obj.mbr;
  r.box[pivot] = s.interval;
  r.beta = s.beta;
  r.pivot = pivot;
  return r;
}

}  // namespace

Histogram instance_histogram(const ImputedObject& obj, std::size_t buckets) {
  require_instances(obj);
  const AttrIndex pivot = pivot_of(obj);
  std::vector<std::pair<double, double>> items;
  items.reserve(obj.instances.size());
  for (const auto& inst : obj.instances) items.emplace_back(inst.values[pivot], inst.confidence);
  return Histogram::equi_depth_weighted(std::move(items), buckets);
}

SampleRegion sample_region_x(const ImputedObject& x, const Histogram& hist_x,
                             const JoinParams& params) {
  return region_from(x, pivot_of(x), select_sub_mbr_x(hist_x, params.alpha));
}

SampleRegion sample_region_y(const ImputedObject& y, const Histogram& hist_y, double beta_x,
                             const JoinParams& params) {
  return region_from(y, pivot_of(y), prefix_sub_mbr(hist_y, (1.0 - params.alpha) / beta_x));
}

SampleRegion sample_region_x(const ImputedObject& x, const JoinParams& params,
                             std::size_t buckets) {
  return sample_region_x(x, instance_histogram(x, buckets), params);
}

SampleRegion sample_region_y(const ImputedObject& y, double beta_x, const JoinParams& params,
                             std::size_t buckets) {
  return sample_region_y(y, instance_histogram(y, buckets), beta_x, params);
}

std::pair<SampleRegion, SampleRegion> sample_regions(const ImputedObject& x,
                                                     const ImputedObject& y,
                                                     const JoinParams& params,
                                                     std::size_t buckets) {
  auto sx = sample_region_x(x, params, buckets);
  auto sy = sample_region_y(y, sx.beta, params, buckets);
  return {std::move(sx), std::move(sy)};
}

double join_probability(const ImputedObject& x, const ImputedObject& y, const JoinParams& params) {
  require_instances(x);
  require_instances(y);
  // Fixed summation order, so the result does not depend on which side probes.
  if (x.id().stream == StreamId::kSecond && y.id().stream == StreamId::kFirst)
    return join_probability(y, x, params);
  const double eps_sq = params.epsilon * params.epsilon;
  double p = 0.0;
  for (const auto& a : x.instances) {
    double inner = 0.0;
    for (const auto& b : y.instances)
      inner += squared_distance(a.values, b.values) <= eps_sq ? b.confidence : 0.0;
    p += a.confidence * inner;
  }
  return std::clamp(p, 0.0, 1.0);
}

double join_probability_oracle(const ImputedObject& x, const ImputedObject& y,
                               std::span<const ImputedObjectPtr> w1,
                               std::span<const ImputedObjectPtr> w2, const JoinParams& params,
                               std::size_t cap) {
  auto position = [](std::span<const ImputedObjectPtr> w, const ImputedObject& o) {
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i].get() == &o || w[i]->id() == o.id()) return i;
    throw StateError("oracle object is not in its window");
  };
  const std::size_t ix = position(w1, x), iy = position(w2, y);
  const auto worlds1 = enumerate_possible_worlds(w1, cap);
  const auto worlds2 = enumerate_possible_worlds(w2, cap);
  if (worlds1.size() > cap / std::max<std::size_t>(1, worlds2.size()))
    throw CombinatorialBlowup("joint possible-world count exceeds cap");
  const double eps_sq = params.epsilon * params.epsilon;
  double p = 0.0;
  for (const auto& a : worlds1) {
    const auto& va = w1[ix]->instances[a.choice[ix]].values;
    for (const auto& b : worlds2) {
      const auto& vb = w2[iy]->instances[b.choice[iy]].values;
      if (squared_distance(va, vb) <= eps_sq) p += a.probability * b.probability;
    }
  }
  return p;
}

}  // namespace joinids
