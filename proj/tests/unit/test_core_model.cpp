#include <doctest.h>

#include <numeric>

#include "fixtures.hpp"

using namespace joinids;

namespace {

ImputedObjectPtr complete(Timestamp t, double v = 0.5) {
  return std::make_shared<ImputedObject>(ImputedObject::from_complete(fx::obj(t, {v, v})));
}

ImputedObjectPtr with_confidences(Timestamp t, std::vector<double> conf) {
  std::vector<Instance> inst;
  for (std::size_t i = 0; i < conf.size(); ++i) inst.push_back({{0.1 * i, 0.5}, conf[i]});
  return fx::imputed(t, StreamId::kFirst, std::move(inst));
}

}  // namespace

TEST_CASE("schema letters and lookup") {
  auto s = AttributeSchema::with_letters(4);
  CHECK(s.names() == std::vector<std::string>{"A", "B", "C", "D"});
  CHECK(s.index_of("C") == 2);
  CHECK_THROWS_AS(s.index_of("Z"), SchemaError);
  CHECK_THROWS_AS(AttributeSchema({"A", "A"}), SchemaError);
  CHECK(AttributeSchema::with_letters(28).name(27) == "B1");
}

TEST_CASE("incomplete object validation") {
  CHECK_NOTHROW(fx::obj(1, {0.2, std::nullopt}).validate());
  CHECK_THROWS_AS(fx::obj(1, {std::nullopt, std::nullopt}).validate(), SchemaError);
  CHECK_THROWS_AS(fx::obj(1, {1.5, 0.1}).validate(), SchemaError);
  auto o = fx::obj(1, {0.2, std::nullopt, std::nullopt});
  CHECK(o.missing_count() == 2);
  CHECK(o.missing_attributes() == std::vector<AttrIndex>{1, 2});
}

TEST_CASE("window slide evicts the oldest entry") {
  SlidingWindow w(3);
  CHECK_FALSE(window_slide(w, complete(1)).has_value());
  CHECK_FALSE(w.slide(complete(2)).has_value());
  CHECK_FALSE(w.slide(complete(3)).has_value());
  auto expired = w.slide(complete(4));
  REQUIRE(expired.has_value());
  CHECK((*expired)->timestamp() == 1);
  CHECK(w.entries().front()->timestamp() == 2);
  CHECK(w.entries().back()->timestamp() == 4);
}

TEST_CASE("window rejects duplicate and gapped timestamps") {
  SlidingWindow w(3);
  w.slide(complete(5));
  CHECK_THROWS_AS(w.slide(complete(5)), OrderingError);
  CHECK_THROWS_AS(w.slide(complete(7)), OrderingError);
  CHECK_THROWS_AS(w.slide(complete(4)), OrderingError);
}

TEST_CASE("window contents after t slides") {
  for (std::size_t cap : {1u, 2u, 5u}) {
    SlidingWindow w(cap);
    for (Timestamp t = 1; t <= 12; ++t) {
      w.slide(complete(t));
      const Timestamp lo = std::max<Timestamp>(1, t - static_cast<Timestamp>(cap) + 1);
      REQUIRE(w.size() == static_cast<std::size_t>(t - lo + 1));
      for (std::size_t i = 0; i < w.size(); ++i)
        CHECK(w.entries()[i]->timestamp() == lo + static_cast<Timestamp>(i));
    }
  }
}

TEST_CASE("make_room retires before the next slide") {
  SlidingWindow w(2);
  w.slide(complete(1));
  CHECK_FALSE(w.make_room().has_value());
  w.slide(complete(2));
  auto gone = w.make_room();
  REQUIRE(gone.has_value());
  CHECK((*gone)->timestamp() == 1);
  CHECK_FALSE(w.slide(complete(3)).has_value());
  CHECK(w.newest_timestamp() == 3);
}

TEST_CASE("possible worlds: uniform products") {
  std::vector<ImputedObjectPtr> a{with_confidences(1, {0.5, 0.5}), with_confidences(2, {1.0})};
  auto worlds = enumerate_possible_worlds(a);
  REQUIRE(worlds.size() == 2);
  CHECK(worlds[0].probability == doctest::Approx(0.5));
  CHECK(worlds[1].probability == doctest::Approx(0.5));

  std::vector<ImputedObjectPtr> b{with_confidences(1, {0.5, 0.5}),
                                  with_confidences(2, {0.5, 0.5})};
  auto w4 = enumerate_possible_worlds(b);
  REQUIRE(w4.size() == 4);
  for (const auto& w : w4) CHECK(w.probability == doctest::Approx(0.25));
}

TEST_CASE("possible worlds: mixed confidences") {
  std::vector<ImputedObjectPtr> objs{with_confidences(1, {0.3, 0.7}),
                                     with_confidences(2, {0.6, 0.4})};
  auto worlds = enumerate_possible_worlds(objs);
  REQUIRE(worlds.size() == 4);
  std::vector<double> probs;
  for (const auto& w : worlds) probs.push_back(w.probability);
  std::sort(probs.begin(), probs.end());
  const std::vector<double> expected{0.12, 0.18, 0.28, 0.42};
  for (std::size_t i = 0; i < 4; ++i) CHECK(probs[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("possible worlds: cap and state checks") {
  std::vector<ImputedObjectPtr> objs;
  for (int i = 0; i < 4; ++i) objs.push_back(with_confidences(i + 1, {0.25, 0.25, 0.25, 0.25}));
  CHECK_THROWS_AS(enumerate_possible_worlds(objs, 100), CombinatorialBlowup);
  CHECK(enumerate_possible_worlds(objs, 256).size() == 256);

  auto range = std::make_shared<ImputedObject>();
  range->state = ImputationState::kRange;
  std::vector<ImputedObjectPtr> bad{range};
  CHECK_THROWS_AS(enumerate_possible_worlds(bad), StateError);
}

TEST_CASE("possible worlds sum to one on random windows") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    SlidingWindow w(3);
    for (Timestamp t = 1; t <= 3; ++t) w.slide(fx::random_imputed(rng, t, StreamId::kFirst, 3, 4, 0.2));
    double s = 0.0;
    for (const auto& pw : enumerate_possible_worlds(w)) s += pw.probability;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("normalize_candidates merges, caps and renormalizes") {
  const std::vector<double> raw{0.2, 0.2, 0.6, 0.2000000001, 0.9, 0.6};
  auto c = normalize_candidates(raw, 16);
  REQUIRE(c.size() == 3);
  double sum = 0.0;
  for (const auto& v : c) sum += v.confidence;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c[0].value == doctest::Approx(0.2));
  CHECK(c[0].confidence == doctest::Approx(0.5));

  auto capped = normalize_candidates(raw, 2);
  REQUIRE(capped.size() == 2);
  CHECK(capped[0].confidence + capped[1].confidence == doctest::Approx(1.0));
  CHECK(capped[0].confidence == doctest::Approx(0.6));
  CHECK(normalize_candidates({}, 4).empty());
}

TEST_CASE("instance confidences are products of candidate confidences") {
  auto o = fx::obj(1, {0.3, std::nullopt, std::nullopt});
  std::vector<AttributeCandidates> cands{{1, {{0.1, 0.25}, {0.2, 0.75}}},
                                         {2, {{0.5, 0.4}, {0.6, 0.6}}}};
  auto inst = build_instances(o, cands);
  REQUIRE(inst.size() == 4);
  double total = 0.0;
  for (const auto& i : inst) {
    double expected = 1.0;
    for (const auto& ac : cands)
      for (const auto& cv : ac.candidates)
        if (cv.value == i.values[ac.attribute]) expected *= cv.confidence;
    CHECK(i.confidence == doctest::Approx(expected).epsilon(1e-12));
    CHECK(i.values[0] == 0.3);
    total += i.confidence;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  auto box = bounding_box(inst, 3);
  for (const auto& i : inst) CHECK(box.contains(i.values));
}

TEST_CASE("complete objects become one certain instance") {
  auto p = ImputedObject::from_complete(fx::obj(3, {0.1, 0.2}));
  CHECK(p.state == ImputationState::kInstance);
  REQUIRE(p.instances.size() == 1);
  CHECK(p.instances[0].confidence == 1.0);
  CHECK(p.mbr == Mbr::point(std::vector<double>{0.1, 0.2}));
}

TEST_CASE("mbr containment and intersection") {
  Mbr a({{0.0, 0.5}, {0.0, 0.5}});
  Mbr b({{0.5, 0.7}, {0.2, 0.3}});
  CHECK(a.intersects(b));
  CHECK_FALSE(a.contains(b));
  Mbr e = Mbr::empty(2);
  CHECK_FALSE(e.valid());
  e.expand(b);
  CHECK(e == b);
  e.expand(std::vector<double>{0.1, 0.9});
  CHECK(e.contains(b));
  CHECK(e[1].hi == 0.9);
}

TEST_CASE("join set endpoints") {
  JoinSet js;
  js.add(1, 1, 0.9);
  js.add(1, 2, 0.6);
  js.add(2, 2, 0.7);
  CHECK(js.size() == 3);
  CHECK(js.probability(1, 2) == 0.6);
  auto gone = js.remove_endpoint(StreamId::kFirst, 1);
  CHECK(gone.size() == 2);
  CHECK(js.size() == 1);
  CHECK_FALSE(js.contains(1, 1));
  auto gone_y = js.remove_endpoint(StreamId::kSecond, 2);
  REQUIRE(gone_y.size() == 1);
  CHECK(gone_y[0].x == 2);
  CHECK(js.empty());
  CHECK(js.remove_endpoint(StreamId::kSecond, 9).empty());
}

TEST_CASE("join set sorted order and erase") {
  JoinSet js;
  js.add(3, 1, 1.0);
  js.add(1, 5, 1.0);
  js.add(1, 2, 1.0);
  auto s = js.sorted();
  REQUIRE(s.size() == 3);
  CHECK((s[0].x == 1 && s[0].y == 2));
  CHECK((s[2].x == 3 && s[2].y == 1));
  CHECK(js.erase(1, 5));
  CHECK_FALSE(js.erase(1, 5));
  CHECK(js.remove_endpoint(StreamId::kSecond, 5).empty());
  CHECK(js.remove_endpoint(StreamId::kFirst, 1).size() == 1);
}

TEST_CASE("query range containment") {
  QueryRange q{{0, 2}, {{0.1, 0.3}, {0.5, 0.5}}};
  CHECK(q.contains(std::vector<double>{0.2, 0.9, 0.5}));
  CHECK_FALSE(q.contains(std::vector<double>{0.2, 0.9, 0.51}));
}
