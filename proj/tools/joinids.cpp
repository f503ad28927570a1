// joinids: run the streaming join, generate synthetic data, evaluate output.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "joinids/datagen.hpp"
#include "joinids/dd_engine.hpp"
#include "joinids/engine.hpp"
#include "joinids/io.hpp"

namespace fs = std::filesystem;
using namespace joinids;

namespace {

struct RunOptions {
  std::string stream1, stream2, repo, rules, out = "-", summary;
  double epsilon = 0.3, alpha = 0.5;
  std::size_t window = 2000, lambda = 10, cluster_samples = 100, max_candidates = 16;
  std::vector<std::size_t> leaf_capacities{16, 32, 64};
  std::string algo = "joinids";
};

struct GenerateOptions {
  std::string out_dir = ".";
  std::string distribution = "correlated";
  std::size_t d = 4, repo_size = 30000, stream_length = 10000, seeds = 5000, m = 1, window = 2000;
  double epsilon = 0.3, variance = 0.05;
  std::uint64_t seed = 1;
};

struct EvalOptions {
  std::string deltas, groundtruth, summary;
  std::size_t window = 2000;
};

CLI::Option* env(CLI::Option* opt, const std::string& name) {
  return opt->envname("JOINIDS_" + name);
}

void print_kv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

int cmd_run(const RunOptions& o) {
  auto s1 = read_stream_csv(o.stream1, StreamId::kFirst);
  auto s2 = read_stream_csv(o.stream2, StreamId::kSecond);
  auto rd = read_repository_csv(o.repo);
  if (!(s1.schema == rd.schema) || !(s2.schema == rd.schema))
    throw SchemaError("stream and repository headers differ");
  auto rules = load_rules(o.rules, rd.schema);
  auto repo = std::make_shared<const Repository>(rd.schema, std::move(rd.rows));

  IndexConfig ic;
  ic.lambda = o.lambda;
  ic.leaf_capacities = o.leaf_capacities;
  ic.cluster_samples = o.cluster_samples;
  ImputerConfig imp;
  imp.max_candidates = o.max_candidates;

  const auto t0 = std::chrono::steady_clock::now();
  auto model = ImputationModel::build(repo, rules, ic, imp);
  const auto t1 = std::chrono::steady_clock::now();

  EngineConfig ec;
  ec.params = {o.epsilon, o.alpha};
  ec.window = o.window;
  ec.algorithm = parse_algorithm(o.algo);
  ec.sample_buckets = o.lambda;
  Engine engine(model, ec);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (o.out != "-") {
    file.open(o.out);
    if (!file) throw ParseError("cannot write " + o.out);
    out = &file;
  }
  const auto t2 = std::chrono::steady_clock::now();
  auto deltas = run_streams(engine, s1.objects, s2.objects);
  const auto t3 = std::chrono::steady_clock::now();
  for (const auto& d : deltas) write_delta(*out, d);

  const auto& st = engine.stats();
  auto secs = [](auto a, auto b) { return num(std::chrono::duration<double>(b - a).count()); };
  std::vector<std::pair<std::string, std::string>> kv = {
      {"algorithm", to_string(ec.algorithm)},
      {"timestamps", std::to_string(st.steps)},
      {"startup_seconds", secs(t0, t1)},
      {"join_seconds", secs(t2, t3)},
      {"final_pairs", std::to_string(engine.join_set().size())},
      {"window_pairs", std::to_string(st.window_pairs)},
      {"candidate_pairs", std::to_string(st.candidate_pairs)},
      {"lemma1_pruned", std::to_string(st.lemma1_pruned)},
      {"lemma3_pruned", std::to_string(st.lemma3_pruned)},
      {"refined", std::to_string(st.refined)},
      {"instance_pairs", std::to_string(st.instance_pairs)},
      {"joined", std::to_string(st.joined)},
      {"pruning_power_candidates", num(st.pruning_power())},
      {"pruning_power_window",
       num(st.window_pairs ? 1.0 - static_cast<double>(st.refined) / st.window_pairs : 0.0)},
      {"full_imputations", std::to_string(st.full_imputations)},
      {"node_states", std::to_string(st.node_states)},
      {"lazy_inserts", std::to_string(st.lazy_inserts)},
      {"unimputable", std::to_string(st.unimputable)},
  };
  std::ostream& sum = o.out == "-" ? std::cerr : std::cout;
  print_kv(sum, kv);
  if (!o.summary.empty()) {
    std::ofstream f(o.summary);
    print_kv(f, kv);
  }
  return 0;
}

int cmd_generate(const GenerateOptions& o) {
  const Family fam = parse_family(o.distribution);
  auto rules = family_rules(fam, o.d);
  GenerateConfig gc;
  gc.family = fam;
  gc.d = o.d;
  gc.count = o.repo_size + 2 * o.stream_length;
  gc.seed_count = o.seeds;
  gc.rng_seed = o.seed;
  gc.variance = o.variance;
  auto data = generate(gc, rules);
  std::vector<AttrIndex> deps;
  for (const auto& r : rules) deps.push_back(r.dependent);
  auto masked = mask(data, o.m, deps, o.stream_length, o.seed + 1);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_stream_csv((dir / "stream1.csv").string(), masked.schema, masked.stream1);
  write_stream_csv((dir / "stream2.csv").string(), masked.schema, masked.stream2);
  write_repository_csv((dir / "repository.csv").string(), masked.schema, masked.repository);
  write_groundtruth_csv((dir / "groundtruth.csv").string(),
                        groundtruth_pairs(masked.truth1, masked.truth2, o.epsilon, o.window));
  {
    std::ofstream f(dir / "rules.txt");
    for (const auto& r : rules) f << format_rule(r, masked.schema) << '\n';
  }
  print_kv(std::cout, {{"distribution", to_string(fam)},
                       {"d", std::to_string(o.d)},
                       {"stream_length", std::to_string(o.stream_length)},
                       {"repository_rows", std::to_string(masked.repository_rows)},
                       {"out_dir", o.out_dir}});
  return 0;
}

int cmd_eval(const EvalOptions& o) {
  auto deltas = read_delta_log(o.deltas);
  auto truth = read_groundtruth_csv(o.groundtruth);
  auto r = replay(deltas);
  PairSet final_pairs;
  Timestamp last_x = 0, last_y = 0;
  for (const auto& p : r.final_set.sorted()) final_pairs.emplace(p.x, p.y);
  for (const auto& d : deltas) last_x = last_y = d.t;
  auto fin = compute_metrics(final_pairs, final_window_pairs(truth, last_x, last_y, o.window));
  auto all = compute_metrics(r.ever_added, truth);
  std::vector<std::pair<std::string, std::string>> kv = {
      {"recall", num(fin.recall)},       {"precision", num(fin.precision)},
      {"f1", num(fin.f1)},               {"final_returned", std::to_string(fin.returned)},
      {"final_expected", std::to_string(fin.expected)},
      {"cumulative_recall", num(all.recall)},
      {"cumulative_precision", num(all.precision)},
      {"cumulative_f1", num(all.f1)}};
  if (!o.summary.empty()) {
    std::ifstream f(o.summary);
    if (!f) throw ParseError("cannot open " + o.summary);
    std::map<std::string, std::string> s;
    std::string line;
    while (std::getline(f, line))
      if (auto eq = line.find('='); eq != std::string::npos) s[line.substr(0, eq)] = line.substr(eq + 1);
    for (const char* k : {"candidate_pairs", "lemma1_pruned", "lemma3_pruned", "refined",
                          "pruning_power_candidates", "pruning_power_window", "join_seconds"})
      if (s.count(k)) kv.emplace_back(k, s[k]);
  }
  print_kv(std::cout, kv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic similarity join over incomplete data streams"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run the streaming join and write the delta log");
  env(run->add_option("--stream1", ro.stream1, "Stream 1 CSV")->required(), "STREAM1");
  env(run->add_option("--stream2", ro.stream2, "Stream 2 CSV")->required(), "STREAM2");
  env(run->add_option("--repo", ro.repo, "Repository CSV")->required(), "REPO");
  env(run->add_option("--rules", ro.rules, "Rule file")->required(), "RULES");
  env(run->add_option("--epsilon", ro.epsilon, "Distance threshold")->capture_default_str(), "EPSILON");
  env(run->add_option("--alpha", ro.alpha, "Probability threshold")->capture_default_str(), "ALPHA");
  env(run->add_option("--window", ro.window, "Window size")->capture_default_str(), "WINDOW");
  env(run->add_option("--algo", ro.algo, "joinids | dd-grid | dd-asp")->capture_default_str(), "ALGO");
  env(run->add_option("--lambda", ro.lambda, "Histogram buckets")->capture_default_str(), "LAMBDA");
  env(run->add_option("--leaf-capacity", ro.leaf_capacities, "Candidate leaf capacities")
                ->capture_default_str()->delimiter(','), "LEAF_CAPACITY");
  env(run->add_option("--cluster-samples", ro.cluster_samples, "Cluster-selection samples")
                ->capture_default_str(), "CLUSTER_SAMPLES");
  env(run->add_option("--max-candidates", ro.max_candidates, "Candidates per missing attribute")
                ->capture_default_str(), "MAX_CANDIDATES");
  env(run->add_option("--out", ro.out, "Delta log path ('-' for stdout)")->capture_default_str(), "OUT");
  env(run->add_option("--summary", ro.summary, "Also write the summary here"), "SUMMARY");

  GenerateOptions go;
  auto* gen = app.add_subcommand("generate", "Generate synthetic streams, repository and groundtruth");
  env(gen->add_option("--out-dir", go.out_dir, "Output directory")->capture_default_str(), "OUT_DIR");
  env(gen->add_option("--distribution", go.distribution, "uniform | correlated | anti-correlated")
                ->capture_default_str(), "DISTRIBUTION");
  env(gen->add_option("--d", go.d, "Attributes")->capture_default_str(), "D");
  env(gen->add_option("--repo-size", go.repo_size, "Repository rows")->capture_default_str(), "REPO_SIZE");
  env(gen->add_option("--stream-length", go.stream_length, "Rows per stream")->capture_default_str(),
            "STREAM_LENGTH");
  env(gen->add_option("--seeds", go.seeds, "Seed rows")->capture_default_str(), "SEEDS");
  env(gen->add_option("--m", go.m, "Missing attributes per row")->capture_default_str(), "M");
  env(gen->add_option("--epsilon", go.epsilon, "Groundtruth distance threshold")->capture_default_str(),
            "EPSILON");
  env(gen->add_option("--window", go.window, "Groundtruth window size")->capture_default_str(), "WINDOW");
  env(gen->add_option("--variance", go.variance, "Variance around the diagonal / plane")->capture_default_str(),
      "VARIANCE");
  env(gen->add_option("--seed", go.seed, "RNG seed")->capture_default_str(), "SEED");

  EvalOptions eo;
  auto* ev = app.add_subcommand("eval", "Score a delta log against groundtruth");
  env(ev->add_option("--deltas", eo.deltas, "Delta log")->required(), "DELTAS");
  env(ev->add_option("--groundtruth", eo.groundtruth, "Groundtruth CSV")->required(), "GROUNDTRUTH");
  env(ev->add_option("--window", eo.window, "Window size")->capture_default_str(), "WINDOW");
  env(ev->add_option("--summary", eo.summary, "Run summary file for pruning statistics"), "SUMMARY");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(ro);
    if (*gen) return cmd_generate(go);
    if (*ev) return cmd_eval(eo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
