#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "joinids/core_model.hpp"
#include "joinids/dd_engine.hpp"

namespace fx {

using namespace joinids;

inline IncompleteObject obj(Timestamp t, std::vector<std::optional<double>> v,
                            StreamId s = StreamId::kFirst) {
  IncompleteObject o;
  o.timestamp = t;
  o.stream = s;
  o.values = std::move(v);
  return o;
}

/// INSTANCE-state object with explicit instances; the box is their hull.
inline ImputedObjectPtr imputed(Timestamp t, StreamId s, std::vector<Instance> inst) {
  auto p = std::make_shared<ImputedObject>();
  const std::size_t d = inst.front().values.size();
  p->source.timestamp = t;
  p->source.stream = s;
  p->source.values.assign(d, std::nullopt);
  p->source.values[0] = inst.front().values[0];
  p->state = ImputationState::kInstance;
  p->mbr = bounding_box(inst, d);
  p->instances = std::move(inst);
  return p;
}

/// Random INSTANCE object: up to max_inst instances drawn around a centre
/// with random confidences normalized to 1. The first attribute is present.
inline ImputedObjectPtr random_imputed(std::mt19937_64& rng, Timestamp t, StreamId s,
                                       std::size_t d, std::size_t max_inst, double spread) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> n(1, max_inst);
  std::vector<double> centre(d);
  for (auto& c : centre) c = u(rng);
  const std::size_t k = n(rng);
  std::vector<Instance> inst(k);
  double total = 0.0;
  for (auto& i : inst) {
    i.values = centre;
    for (std::size_t j = 1; j < d; ++j)
      i.values[j] = std::clamp(centre[j] + (u(rng) - 0.5) * spread, 0.0, 1.0);
    i.confidence = 0.05 + u(rng);
    total += i.confidence;
  }
  for (auto& i : inst) i.confidence /= total;
  return imputed(t, s, std::move(inst));
}

inline std::shared_ptr<const Repository> random_repo(std::size_t rows, std::size_t d,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(rows * d);
  for (auto& v : data) v = u(rng);
  return std::make_shared<const Repository>(AttributeSchema::with_letters(d), std::move(data));
}

inline DDRule rule(std::vector<AttrIndex> det, std::vector<double> eps, AttrIndex dep,
                   double dep_eps) {
  DDRule r;
  r.determinants = std::move(det);
  r.determinant_eps = std::move(eps);
  r.dependent = dep;
  r.dependent_eps = dep_eps;
  return r;
}

}  // namespace fx
