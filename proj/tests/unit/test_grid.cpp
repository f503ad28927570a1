#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "joinids/grid.hpp"
#include "joinids/prune.hpp"

using namespace joinids;

namespace {

ImputedObjectPtr boxed(Timestamp t, StreamId s, Mbr box) {
  auto p = std::make_shared<ImputedObject>();
  p->source.timestamp = t;
  p->source.stream = s;
  p->source.values.assign(box.dimensions(), 0.5);
  p->state = ImputationState::kNode;
  p->mbr = std::move(box);
  return p;
}

Mbr line(double lo, double hi) { return Mbr({{lo, hi}}); }

std::vector<std::int32_t> first_axis(const std::vector<CellKey>& keys) {
  std::vector<std::int32_t> out;
  for (const auto& k : keys) out.push_back(k[0]);
  return out;
}

Mbr random_box(std::mt19937_64& rng, std::size_t d, double max_width) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Interval> dims;
  for (std::size_t j = 0; j < d; ++j) {
    const double lo = u(rng), w = u(rng) * max_width;
    dims.push_back({lo, std::min(1.0, lo + w)});
  }
  return Mbr(std::move(dims));
}

}  // namespace

TEST_CASE("cells_for examples") {
  CHECK(first_axis(cells_for(line(0.35, 0.35), 0.3)) == std::vector<std::int32_t>{1});
  CHECK(first_axis(cells_for(line(0.25, 0.65), 0.3)) == std::vector<std::int32_t>{0, 1, 2});
  CHECK(first_axis(cells_for(line(0.3, 0.3), 0.3)) == std::vector<std::int32_t>{0, 1});
  CHECK(first_axis(cells_for(line(0.0, 0.0), 0.3)) == std::vector<std::int32_t>{-1, 0});
  auto two = cells_for(Mbr({{0.1, 0.4}, {0.6, 0.6}}), 0.3);
  CHECK(two.size() == 4);
  CHECK(std::is_sorted(two.begin(), two.end()));
}

TEST_CASE("cells_for agrees with closed cell boxes") {
  std::mt19937_64 rng(1);
  for (double eps : {0.1, 0.3, 0.25, 0.07}) {
    for (int t = 0; t < 200; ++t) {
      Mbr b = random_box(rng, 2, 0.5);
      if (t % 5 == 0) b[0].lo = b[0].hi = eps * static_cast<int>(b[0].lo / eps);  // on a boundary
      auto keys = cells_for(b, eps);
      for (const auto& k : keys) CHECK(cell_box(k, eps).intersects(b));
      auto ranges = cell_ranges(b, eps);
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK_FALSE(Interval{(ranges[j].first - 1) * eps, ranges[j].first * eps}.intersects(b[j]));
        CHECK_FALSE(Interval{(ranges[j].second + 1) * eps, (ranges[j].second + 2) * eps}.intersects(b[j]));
      }
    }
  }
}

TEST_CASE("insert, evict and empty cells") {
  EpsilonGrid g(0.3, 1);
  auto a = boxed(1, StreamId::kFirst, line(0.25, 0.65));
  auto b = boxed(1, StreamId::kSecond, line(0.4, 0.4));
  g.insert(a);
  g.insert(b);
  CHECK(g.cell_count() == 3);
  CHECK(first_axis(g.cells_referencing(a->id())) == std::vector<std::int32_t>{0, 1, 2});
  CHECK(g.check_integrity({a, b}).empty());
  g.evict(*a);
  CHECK(g.cell_count() == 1);
  CHECK(g.cells_referencing(a->id()).empty());
  CHECK(g.check_integrity({b}).empty());
  CHECK_FALSE(g.check_integrity({a, b}).empty());
  g.evict(*b);
  CHECK(g.cell_count() == 0);
}

TEST_CASE("reindex only shrinks") {
  EpsilonGrid g(0.3, 1);
  auto a = boxed(1, StreamId::kFirst, line(0.25, 0.65));
  g.insert(a);
  const Mbr old = a->mbr;
  a->mbr = line(0.4, 0.5);
  g.reindex(a, old);
  CHECK(first_axis(g.cells_referencing(a->id())) == std::vector<std::int32_t>{1});
  CHECK(g.cell_count() == 1);
  CHECK(g.check_integrity({a}).empty());

  const Mbr same = a->mbr;
  g.reindex(a, same);
  CHECK(g.cell_count() == 1);

  a->mbr = line(0.41, 0.49);  // same cover
  g.reindex(a, same);
  CHECK(first_axis(g.cells_referencing(a->id())) == std::vector<std::int32_t>{1});

  const Mbr small = a->mbr;
  a->mbr = line(0.1, 0.9);
  CHECK_THROWS_AS(g.reindex(a, small), ContainmentError);
}

TEST_CASE("candidate cells examples") {
  EpsilonGrid g(0.3, 2);
  auto y = boxed(1, StreamId::kSecond, Mbr({{0.45, 0.45}, {0.45, 0.45}}));
  g.insert(y);
  CHECK(g.candidate_cells(Mbr({{0.45, 0.45}, {0.45, 0.45}}), StreamId::kSecond).size() == 1);
  CHECK(g.candidate_cells(Mbr({{0.45, 0.45}, {0.45, 0.45}}), StreamId::kFirst).empty());
  CHECK(g.candidate_cells(Mbr({{2.0, 2.1}, {2.0, 2.1}}), StreamId::kSecond).empty());
  CHECK_FALSE(g.has_candidate(Mbr({{2.0, 2.1}, {2.0, 2.1}}), StreamId::kSecond));

  // Corner fixture: the populated cell is (1,1) = [0.3,0.6]^2. A probe at
  // (0.05,0.05) is a diagonal neighbour's point at distance 0.25*sqrt(2) =
  // 0.354 > 0.3; at (0.1,0.1) the distance is 0.283.
  EpsilonGrid c(0.3, 2);
  c.insert(boxed(1, StreamId::kSecond, Mbr({{0.35, 0.35}, {0.35, 0.35}})));
  auto far = c.candidate_cells(Mbr({{0.05, 0.05}, {0.05, 0.05}}), StreamId::kSecond);
  CHECK(far.empty());
  auto near = c.candidate_cells(Mbr({{0.1, 0.1}, {0.1, 0.1}}), StreamId::kSecond);
  REQUIRE(near.size() == 1);
  CHECK(*near[0].key == CellKey{1, 1});
}

TEST_CASE("candidate cells match the exhaustive scan") {
  std::mt19937_64 rng(44);
  for (std::size_t d : {1u, 2u, 3u, 4u}) {
    for (double eps : {0.1, 0.3}) {
      EpsilonGrid g(eps, d);
      std::vector<ImputedObjectPtr> objs;
      for (int i = 0; i < 80; ++i) {
        auto o = boxed(i + 1, i % 2 ? StreamId::kSecond : StreamId::kFirst, random_box(rng, d, 0.2));
        g.insert(o);
        objs.push_back(o);
      }
      for (int t = 0; t < 100; ++t) {
        const Mbr probe = random_box(rng, d, t % 10 == 0 ? 1.0 : 0.1);
        for (auto s : {StreamId::kFirst, StreamId::kSecond}) {
          auto a = g.candidate_cells(probe, s);
          auto b = g.candidate_cells_exhaustive(probe, s);
          std::sort(a.begin(), a.end(), [](auto& l, auto& r) { return *l.key < *r.key; });
          REQUIRE(a.size() == b.size());
          for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].key == *b[i].key);
          CHECK(g.has_candidate(probe, s) == !b.empty());
          // Any object within eps of the probe sits in a returned cell.
          for (const auto& o : objs) {
            if (o->id().stream != s || mindist(o->mbr, probe) > eps) continue;
            bool found = false;
            for (const auto& cc : a)
              for (const auto& q : *cc.queue) found = found || q == o;
            CHECK(found);
          }
        }
      }
    }
  }
}

TEST_CASE("random operation sequences keep references exact") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EpsilonGrid g(0.2, 3);
  std::vector<ImputedObjectPtr> live;
  for (int step = 0; step < 2000; ++step) {
    const double r = u(rng);
    if (r < 0.45 || live.empty()) {
      auto o = boxed(step + 1, u(rng) < 0.5 ? StreamId::kFirst : StreamId::kSecond,
                     random_box(rng, 3, 0.5));
      g.insert(o);
      live.push_back(o);
    } else if (r < 0.75) {
      auto& o = live[static_cast<std::size_t>(u(rng) * live.size())];
      const Mbr old = o->mbr;
      Mbr next = old;
      for (std::size_t j = 0; j < 3; ++j) {
        const double a = old[j].lo + u(rng) * old[j].width();
        const double b = a + u(rng) * (old[j].hi - a);
        next[j] = {a, b};
      }
      o->mbr = next;
      g.reindex(o, old);
    } else {
      const auto i = static_cast<std::size_t>(u(rng) * live.size());
      g.evict(*live[i]);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
    }
    if (step % 100 == 0) REQUIRE(g.check_integrity(live).empty());
  }
  CHECK(g.check_integrity(live).empty());
}

TEST_CASE("grid configuration errors") {
  CHECK_THROWS_AS(EpsilonGrid(0.0, 2), ConfigError);
  CHECK_THROWS_AS(EpsilonGrid(0.3, 0), ConfigError);
  EpsilonGrid g(0.3, 2);
  CHECK_THROWS_AS(g.insert(boxed(1, StreamId::kFirst, line(0.1, 0.2))), SchemaError);
}
