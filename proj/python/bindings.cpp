#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "joinids/datagen.hpp"
#include "joinids/engine.hpp"
#include "joinids/io.hpp"
#include "joinids/prune.hpp"

namespace py = pybind11;
using namespace joinids;

namespace {

using Row = std::vector<std::optional<double>>;
using PairList = std::vector<std::pair<Timestamp, Timestamp>>;

std::vector<Row> rows_of(const std::vector<IncompleteObject>& objs) {
  std::vector<Row> out;
  out.reserve(objs.size());
  for (const auto& o : objs) out.push_back(o.values);
  return out;
}

std::vector<IncompleteObject> objects_of(const std::vector<Row>& rows, StreamId stream,
                                         std::size_t d) {
  std::vector<IncompleteObject> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d)
      throw SchemaError("stream row " + std::to_string(i) + " has " +
                        std::to_string(rows[i].size()) + " values, expected " + std::to_string(d));
    IncompleteObject o;
    o.stream = stream;
    o.timestamp = static_cast<Timestamp>(i + 1);
    o.values = rows[i];
    out.push_back(std::move(o));
  }
  return out;
}

struct Workload {
  MaskedData data;
  std::vector<std::string> rules;

  PairList groundtruth(double epsilon, std::size_t window) const {
    return groundtruth_pairs(data.truth1, data.truth2, epsilon, window);
  }
  std::vector<std::vector<double>> repository() const {
    const std::size_t d = data.schema.size();
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < data.repository.size(); i += d)
      out.emplace_back(data.repository.begin() + i, data.repository.begin() + i + d);
    return out;
  }
};

Workload generate_workload(const std::string& distribution, std::size_t d, std::size_t repo_size,
                           std::size_t stream_length, std::size_t seeds, std::size_t m,
                           std::uint64_t seed, double variance) {
  const Family fam = parse_family(distribution);
  auto rules = family_rules(fam, d);
  GenerateConfig g;
  g.family = fam;
  g.d = d;
  g.count = repo_size + 2 * stream_length;
  g.seed_count = seeds;
  g.rng_seed = seed;
  g.variance = variance;
  std::vector<AttrIndex> deps;
  for (const auto& r : rules) deps.push_back(r.dependent);
  Workload w;
  w.data = mask(generate(g, rules), m, deps, stream_length, seed + 1);
  for (const auto& r : rules) w.rules.push_back(format_rule(r, w.data.schema));
  return w;
}

py::dict run_join(const std::vector<Row>& stream1, const std::vector<Row>& stream2,
                  const std::vector<std::vector<double>>& repository,
                  const std::vector<std::string>& rules, std::vector<std::string> attributes,
                  double epsilon, double alpha, std::size_t window, const std::string& algorithm) {
  if (repository.empty()) throw ConfigError("repository is empty");
  const std::size_t d = repository.front().size();
  const AttributeSchema schema =
      attributes.empty() ? AttributeSchema::with_letters(d) : AttributeSchema(std::move(attributes));
  if (schema.size() != d) throw SchemaError("attribute names do not match the repository width");
  std::vector<double> flat;
  flat.reserve(repository.size() * d);
  for (const auto& r : repository) {
    if (r.size() != d) throw SchemaError("ragged repository rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  std::string text;
  for (const auto& r : rules) text += r + '\n';

  auto repo = std::make_shared<const Repository>(schema, std::move(flat));
  EngineConfig c;
  c.params = {epsilon, alpha};
  c.window = window;
  c.algorithm = parse_algorithm(algorithm);
  Engine engine(ImputationModel::build(repo, parse_rules(text, schema)), c);

  auto s1 = objects_of(stream1, StreamId::kFirst, d);
  auto s2 = objects_of(stream2, StreamId::kSecond, d);
  std::vector<JoinDelta> deltas;
  {
    py::gil_scoped_release release;
    deltas = run_streams(engine, s1, s2);
  }

  auto triples = [](const std::vector<JoinPair>& v) {
    py::list out;
    for (const auto& p : v) out.append(py::make_tuple(p.x, p.y, p.probability));
    return out;
  };
  py::list log;
  for (const auto& dl : deltas)
    log.append(py::make_tuple(dl.t, triples(dl.added), triples(dl.removed)));

  const auto& st = engine.stats();
  py::dict stats;
  stats["window_pairs"] = st.window_pairs;
  stats["candidate_pairs"] = st.candidate_pairs;
  stats["lemma1_pruned"] = st.lemma1_pruned;
  stats["lemma3_pruned"] = st.lemma3_pruned;
  stats["refined"] = st.refined;
  stats["joined"] = st.joined;
  stats["instance_pairs"] = st.instance_pairs;
  stats["unimputable"] = st.unimputable;
  stats["pruning_power"] = st.pruning_power();

  py::dict out;
  out["final"] = triples(engine.join_set().sorted());
  out["deltas"] = log;
  out["stats"] = stats;
  return out;
}

ImputedObjectPtr instance_object(const std::vector<std::pair<std::vector<double>, double>>& inst,
                                 StreamId stream) {
  if (inst.empty()) throw StateError("an object needs at least one instance");
  auto o = std::make_shared<ImputedObject>();
  const std::size_t d = inst.front().first.size();
  o->source.stream = stream;
  o->source.timestamp = 1;
  o->source.values.assign(d, std::nullopt);
  for (const auto& [values, p] : inst) {
    if (values.size() != d) throw SchemaError("instances differ in dimensionality");
    o->instances.push_back(Instance{values, p});
  }
  o->state = ImputationState::kInstance;
  o->mbr = bounding_box(o->instances, d);
  return o;
}

py::dict metrics_dict(const PairList& returned, const PairList& expected) {
  auto m = compute_metrics(PairSet(returned.begin(), returned.end()),
                           PairSet(expected.begin(), expected.end()));
  py::dict out;
  out["returned"] = m.returned;
  out["expected"] = m.expected;
  out["correct"] = m.correct;
  out["recall"] = m.recall;
  out["precision"] = m.precision;
  out["f1"] = m.f1;
  return out;
}

}  // namespace

PYBIND11_MODULE(_joinids, mod) {
  mod.doc() = "Probabilistic similarity join over incomplete data streams";

  py::register_exception<Error>(mod, "JoinIdsError", PyExc_ValueError);

  py::class_<Workload>(mod, "Workload")
      .def_property_readonly("attributes", [](const Workload& w) { return w.data.schema.names(); })
      .def_property_readonly("stream1", [](const Workload& w) { return rows_of(w.data.stream1); })
      .def_property_readonly("stream2", [](const Workload& w) { return rows_of(w.data.stream2); })
      .def_property_readonly("truth1", [](const Workload& w) { return w.data.truth1; })
      .def_property_readonly("truth2", [](const Workload& w) { return w.data.truth2; })
      .def_property_readonly("repository", &Workload::repository)
      .def_readonly("rules", &Workload::rules)
      .def("groundtruth", &Workload::groundtruth, py::arg("epsilon"), py::arg("window"),
           "Pairs (x, y) with |x - y| < window and unmasked distance <= epsilon.");

  mod.def("generate", &generate_workload, py::arg("distribution") = "correlated",
          py::arg("d") = 4, py::arg("repo_size") = 5000, py::arg("stream_length") = 2000,
          py::arg("seeds") = 1000, py::arg("m") = 1, py::arg("seed") = 1,
          py::arg("variance") = 0.05,
          "Synthetic repository and masked stream pair with retained groundtruth.");

  mod.def("run_join", &run_join, py::arg("stream1"), py::arg("stream2"), py::arg("repository"),
          py::arg("rules"), py::arg("attributes") = std::vector<std::string>{},
          py::arg("epsilon") = 0.3, py::arg("alpha") = 0.5, py::arg("window") = 2000,
          py::arg("algorithm") = "joinids",
          "Runs the streaming join. Rows use None for missing values; row i arrives at "
          "timestamp i + 1. Returns {'final', 'deltas', 'stats'}.");

  mod.def(
      "join_probability",
      [](const std::vector<std::pair<std::vector<double>, double>>& x,
         const std::vector<std::pair<std::vector<double>, double>>& y, double epsilon) {
        return join_probability(*instance_object(x, StreamId::kFirst),
                                *instance_object(y, StreamId::kSecond), JoinParams{epsilon, 1.0});
      },
      py::arg("x"), py::arg("y"), py::arg("epsilon"),
      "Probability that two objects, given as [(values, confidence)], lie within epsilon.");

  mod.def("metrics", &metrics_dict, py::arg("returned"), py::arg("expected"));
  mod.def("f1_score", &f1_score, py::arg("recall"), py::arg("precision"));
}
