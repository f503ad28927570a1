#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "joinids/datagen.hpp"
#include "joinids/engine.hpp"

using namespace joinids;

namespace {

// B tracks A closely, so NODE boxes from a rule A -> B are narrow.
std::shared_ptr<const ImputationModel> diagonal_model() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0), n(-0.02, 0.02);
  std::vector<double> rows;
  for (int i = 0; i < 4000; ++i) {
    const double a = u(rng);
    rows.push_back(a);
    rows.push_back(std::clamp(a + n(rng), 0.0, 1.0));
  }
  auto repo = std::make_shared<const Repository>(AttributeSchema::with_letters(2), rows);
  return ImputationModel::build(repo, {fx::rule({0}, {0.05}, 1, 0.05)});
}

EngineConfig config(Algorithm a, std::size_t w, double eps = 0.3, double alpha = 0.5) {
  EngineConfig c;
  c.algorithm = a;
  c.window = w;
  c.params = {eps, alpha};
  return c;
}

std::optional<IncompleteObject> x_at(Timestamp t, std::vector<std::optional<double>> v) {
  return fx::obj(t, std::move(v), StreamId::kFirst);
}
std::optional<IncompleteObject> y_at(Timestamp t, std::vector<std::optional<double>> v) {
  return fx::obj(t, std::move(v), StreamId::kSecond);
}

std::vector<std::pair<Timestamp, Timestamp>> keys(const std::vector<JoinPair>& v) {
  std::vector<std::pair<Timestamp, Timestamp>> out;
  for (const auto& p : v) out.emplace_back(p.x, p.y);
  return out;
}

std::vector<std::pair<Timestamp, Timestamp>> keys(const JoinSet& js) { return keys(js.sorted()); }

MaskedData small_workload(std::uint64_t seed, std::size_t stream_length) {
  GenerateConfig g;
  g.family = Family::kCorrelated;
  g.d = 3;
  g.count = 2 * stream_length + 1500;
  g.seed_count = 300;
  g.rng_seed = seed;
  auto rules = family_rules(g.family, g.d);
  auto data = generate(g, rules);
  return mask(data, 1, {rules.front().dependent}, stream_length, seed + 1);
}

std::shared_ptr<const ImputationModel> model_for(const MaskedData& m) {
  auto repo = std::make_shared<const Repository>(m.schema, m.repository);
  return ImputationModel::build(repo, family_rules(Family::kCorrelated, m.schema.size()));
}

}  // namespace

TEST_CASE("complete objects within epsilon join with probability one") {
  Engine e(diagonal_model(), config(Algorithm::kJoinIds, 5));
  auto d = e.step(1, x_at(1, {0.2, 0.2}), y_at(1, {0.3, 0.25}));
  REQUIRE(d.added.size() == 1);
  CHECK(d.added[0].x == 1);
  CHECK(d.added[0].y == 1);
  CHECK(d.added[0].probability == 1.0);
  CHECK(e.join_set().probability(1, 1) == 1.0);
}

TEST_CASE("scripted three-step run with window two") {
  for (auto algo : {Algorithm::kJoinIds, Algorithm::kDdGrid, Algorithm::kDdNested}) {
    Engine e(diagonal_model(), config(algo, 2));
    auto d1 = e.step(1, x_at(1, {0.1, 0.1}), y_at(1, {0.1, 0.1}));
    auto d2 = e.step(2, x_at(2, {0.9, 0.1}), y_at(2, {0.1, 0.9}));
    auto d3 = e.step(3, x_at(3, {0.9, 0.9}), y_at(3, {0.5, 0.5}));
    using P = std::vector<std::pair<Timestamp, Timestamp>>;
    CHECK(keys(d1.added) == P{{1, 1}});
    CHECK(d1.removed.empty());
    CHECK(d2.added.empty());
    CHECK(d2.removed.empty());
    CHECK(d3.added.empty());
    CHECK(keys(d3.removed) == P{{1, 1}});
    CHECK(e.join_set().empty());
  }
}

TEST_CASE("far arrivals stay lazy without reading leaves") {
  Engine e(diagonal_model(), config(Algorithm::kJoinIds, 10));
  e.step(1, x_at(1, {0.95, 0.95}), y_at(1, {0.95, 0.95}));
  const auto before = e.stats().imputation.range_queries;
  auto d = e.step(2, x_at(2, {0.1, std::nullopt}), y_at(2, {0.9, 0.92}));
  CHECK(d.added.size() == 1);  // (1,2) only
  const auto& x2 = e.window(StreamId::kFirst).entries().back();
  CHECK(x2->state == ImputationState::kNode);
  CHECK(e.stats().imputation.range_queries == before);
  CHECK(e.stats().lazy_inserts == 1);
  CHECK(x2->mbr[1].hi < 0.3);
  CHECK(e.grid()->check_integrity(e.grid_members()).empty());
}

TEST_CASE("lazy objects are imputed when probed") {
  Engine e(diagonal_model(), config(Algorithm::kJoinIds, 10));
  e.step(1, x_at(1, {0.1, std::nullopt}), y_at(1, {0.95, 0.95}));
  const auto& x1 = e.window(StreamId::kFirst).entries().back();
  REQUIRE(x1->state == ImputationState::kNode);
  auto d = e.step(2, x_at(2, {0.9, 0.9}), y_at(2, {0.12, 0.11}));
  CHECK(x1->state == ImputationState::kInstance);
  CHECK(keys(d.added) == std::vector<std::pair<Timestamp, Timestamp>>{{1, 2}, {2, 1}});
  CHECK(e.grid()->check_integrity(e.grid_members()).empty());
}

TEST_CASE("unimputable arrivals are flagged and never joined") {
  auto repo = std::make_shared<const Repository>(
      AttributeSchema::with_letters(2), std::vector<double>{0.1, 0.1, 0.15, 0.12});
  auto model = ImputationModel::build(repo, {fx::rule({0}, {0.01}, 1, 0.05)});
  for (auto algo : {Algorithm::kJoinIds, Algorithm::kDdGrid, Algorithm::kDdNested}) {
    Engine e(model, config(algo, 4, 0.5));
    auto d = e.step(1, x_at(1, {0.9, std::nullopt}), y_at(1, {0.9, 0.9}));
    REQUIRE(d.unimputable.size() == 1);
    CHECK(d.unimputable[0] == ObjectId{StreamId::kFirst, 1});
    CHECK(d.added.empty());
    auto d2 = e.step(2, x_at(2, {0.85, 0.9}), y_at(2, {0.88, 0.9}));
    for (const auto& p : e.join_set().sorted()) CHECK(p.x != 1);
    CHECK(keys(d2.added) == std::vector<std::pair<Timestamp, Timestamp>>{{2, 1}, {2, 2}});
    if (e.grid()) CHECK(e.grid()->check_integrity(e.grid_members()).empty());
  }
}

TEST_CASE("step argument validation") {
  Engine e(diagonal_model(), config(Algorithm::kJoinIds, 3));
  e.step(1, x_at(1, {0.2, 0.2}), y_at(1, {0.2, 0.2}));
  CHECK_THROWS_AS(e.step(1, x_at(1, {0.2, 0.2}), std::nullopt), OrderingError);
  CHECK_THROWS_AS(e.step(2, x_at(3, {0.2, 0.2}), std::nullopt), OrderingError);
  CHECK_THROWS_AS(e.step(2, y_at(2, {0.2, 0.2}), std::nullopt), OrderingError);
  CHECK_THROWS_AS(e.step(3, x_at(3, {0.2, 0.2}), std::nullopt), OrderingError);
  CHECK_THROWS_AS(e.step(2, x_at(2, {0.2, 0.2, 0.2}), std::nullopt), SchemaError);
  CHECK_THROWS_AS(Engine(nullptr, config(Algorithm::kJoinIds, 3)), ConfigError);
  CHECK_THROWS_AS(Engine(diagonal_model(), config(Algorithm::kJoinIds, 3, -1.0)), ConfigError);
  CHECK(parse_algorithm("dd-nested") == Algorithm::kDdNested);
  CHECK(std::string(to_string(parse_algorithm("dd-asp"))) == "dd-asp");
  CHECK_THROWS_AS(parse_algorithm("quick"), ConfigError);
}

TEST_CASE("three algorithms agree with each other and with recomputation") {
  const auto data = small_workload(31, 300);
  auto model = model_for(data);
  Engine a(model, config(Algorithm::kJoinIds, 40, 0.2));
  Engine b(model, config(Algorithm::kDdGrid, 40, 0.2));
  Engine c(model, config(Algorithm::kDdNested, 40, 0.2));
  std::size_t total = 0;
  for (std::size_t i = 0; i < data.stream1.size(); ++i) {
    const auto t = static_cast<Timestamp>(i + 1);
    auto da = a.step(t, data.stream1[i], data.stream2[i]);
    auto db = b.step(t, data.stream1[i], data.stream2[i]);
    auto dc = c.step(t, data.stream1[i], data.stream2[i]);
    REQUIRE(keys(da.added) == keys(db.added));
    REQUIRE(keys(da.added) == keys(dc.added));
    REQUIRE(keys(da.removed) == keys(dc.removed));
    for (std::size_t k = 0; k < da.added.size(); ++k)
      CHECK(da.added[k].probability == dc.added[k].probability);
    REQUIRE(keys(a.join_set()) == keys(c.join_set()));
    total += a.join_set().size();
    if (i % 25 == 0) {
      const auto want = keys(a.recompute_join_set());
      const auto got = keys(a.join_set());
      if (got != want) {
        for (auto& k : want) if (!a.join_set().contains(k.first, k.second)) MESSAGE("missing " << k.first << "," << k.second);
        for (auto& k : got) if (!std::binary_search(want.begin(), want.end(), k)) MESSAGE("extra " << k.first << "," << k.second);
      }
      REQUIRE(got == want);
      REQUIRE(a.grid()->check_integrity(a.grid_members()).empty());
      REQUIRE(b.grid()->check_integrity(b.grid_members()).empty());
    }
    for (const auto& p : a.join_set().sorted()) {
      CHECK(p.x > t - 40);
      CHECK(p.y > t - 40);
      CHECK(p.probability >= 0.5);
    }
  }
  CHECK(total > 0);
  CHECK(c.stats().candidate_pairs == 0);
  CHECK(a.stats().lazy_inserts + a.stats().full_imputations >= data.stream1.size());
}

TEST_CASE("lazily skipped objects were far from every opposite cell") {
  const auto data = small_workload(5, 250);
  Engine e(model_for(data), config(Algorithm::kJoinIds, 30, 0.1));
  const double eps = 0.1;
  std::size_t lazy = 0;
  for (std::size_t i = 0; i < data.stream1.size(); ++i) {
    const auto t = static_cast<Timestamp>(i + 1);
    e.step(t, data.stream1[i], data.stream2[i]);
    const auto& xt = e.window(StreamId::kFirst).entries().back();
    const auto& yt = e.window(StreamId::kSecond).entries().back();
    auto far_from = [&](const ImputedObject& o, StreamId other, Timestamp upto) {
      for (const auto& q : e.window(other).entries()) {
        if (q->timestamp() > upto || q->unimputable) continue;
        for (const auto& k : cells_for(q->mbr, eps))
          if (mindist(cell_box(k, eps), o.mbr) <= eps) return false;
      }
      return true;
    };
    if (xt->state != ImputationState::kInstance && !xt->unimputable) {
      ++lazy;
      CHECK(far_from(*xt, StreamId::kSecond, t - 1));
    }
    if (yt->state != ImputationState::kInstance && !yt->unimputable) {
      ++lazy;
      CHECK(far_from(*yt, StreamId::kFirst, t));
    }
  }
  MESSAGE("lazy arrivals: " << lazy);
}

TEST_CASE("run_streams aligns arrivals by timestamp") {
  const auto data = small_workload(9, 60);
  auto model = model_for(data);
  Engine a(model, config(Algorithm::kJoinIds, 20));
  Engine b(model, config(Algorithm::kJoinIds, 20));
  auto deltas = run_streams(a, data.stream1, data.stream2);
  CHECK(deltas.size() == 60);
  for (std::size_t i = 0; i < 60; ++i) b.step(static_cast<Timestamp>(i + 1), data.stream1[i], data.stream2[i]);
  CHECK(keys(a.join_set()) == keys(b.join_set()));
}

TEST_CASE("pruning statistics") {
  EngineStats s;
  CHECK(s.pruning_power() == 0.0);
  s.candidate_pairs = 10;
  s.lemma1_pruned = 6;
  s.lemma3_pruned = 2;
  CHECK(s.pruning_power() == doctest::Approx(0.8));
}
