#include "joinids/dd_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace joinids {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::pair<AttrIndex, double> parse_term(const std::string& term, const AttributeSchema& schema,
                                        std::size_t line_no) {
  const auto colon = term.find(':');
  if (colon == std::string::npos)
    throw ParseError("rules line " + std::to_string(line_no) + ": expected name:eps in '" + term + "'");
  const std::string name = trim(term.substr(0, colon));
  const std::string eps_text = trim(term.substr(colon + 1));
  if (!schema.contains(name))
    throw SchemaError("rules line " + std::to_string(line_no) + ": unknown attribute '" + name + "'");
  std::size_t used = 0;
  double eps = 0.0;
  try {
    eps = std::stod(eps_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != eps_text.size())
    throw ParseError("rules line " + std::to_string(line_no) + ": bad epsilon '" + eps_text + "'");
  return {schema.index_of(name), eps};
}

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
    return h;
  }
};

DDRule combine(std::span<const DDRule> base, const std::vector<std::size_t>& members) {
  std::map<AttrIndex, double> eps;
  DDRule out;
  out.dependent = base[members.front()].dependent;
  out.dependent_eps = base[members.front()].dependent_eps;
  for (auto m : members) {
    const auto& r = base[m];
    out.dependent_eps = std::min(out.dependent_eps, r.dependent_eps);
    for (std::size_t k = 0; k < r.determinants.size(); ++k) {
      auto [it, inserted] = eps.try_emplace(r.determinants[k], r.determinant_eps[k]);
      if (!inserted) it->second = std::min(it->second, r.determinant_eps[k]);
    }
  }
  for (const auto& [a, e] : eps) {
    out.determinants.push_back(a);
    out.determinant_eps.push_back(e);
  }
  return out;
}

}  // namespace

double DDRule::eps_of(AttrIndex attr) const {
  if (attr == dependent) return dependent_eps;
  for (std::size_t k = 0; k < determinants.size(); ++k)
    if (determinants[k] == attr) return determinant_eps[k];
  throw SchemaError("attribute not part of rule");
}

void DDRule::validate(std::size_t d) const {
  if (determinants.empty()) throw SchemaError("rule has no determinant attributes");
  if (determinants.size() != determinant_eps.size()) throw SchemaError("rule eps arity mismatch");
  if (dependent >= d) throw SchemaError("rule dependent out of range");
  for (std::size_t k = 0; k < determinants.size(); ++k) {
    if (determinants[k] >= d) throw SchemaError("rule determinant out of range");
    if (determinants[k] == dependent) throw SchemaError("dependent attribute is also a determinant");
    if (k > 0 && determinants[k] <= determinants[k - 1])
      throw SchemaError("rule determinants must be unique");
    if (!(determinant_eps[k] >= 0.0)) throw SchemaError("rule eps must be non-negative");
  }
  if (!(dependent_eps >= 0.0)) throw SchemaError("rule eps must be non-negative");
}

std::vector<DDRule> parse_rules(const std::string& text, const AttributeSchema& schema) {
  std::vector<DDRule> rules;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw ParseError("rules line " + std::to_string(line_no) + ": missing '->'");
    std::map<AttrIndex, double> dets;
    std::istringstream lhs(line.substr(0, arrow));
    std::string term;
    while (std::getline(lhs, term, ',')) {
      if (trim(term).empty()) throw ParseError("rules line " + std::to_string(line_no) + ": empty term");
      auto [a, e] = parse_term(term, schema, line_no);
      if (!dets.emplace(a, e).second)
        throw SchemaError("rules line " + std::to_string(line_no) + ": repeated determinant");
    }
    DDRule rule;
    for (const auto& [a, e] : dets) {
      rule.determinants.push_back(a);
      rule.determinant_eps.push_back(e);
    }
    std::tie(rule.dependent, rule.dependent_eps) = parse_term(line.substr(arrow + 2), schema, line_no);
    rule.validate(schema.size());
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<DDRule> load_rules(const std::string& path, const AttributeSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open rules file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str(), schema);
}

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::string format_rule(const DDRule& rule, const AttributeSchema& schema) {
  std::ostringstream out;
  for (std::size_t k = 0; k < rule.determinants.size(); ++k) {
    if (k) out << ',';
    out << schema.name(rule.determinants[k]) << ':' << shortest(rule.determinant_eps[k]);
  }
  out << " -> " << schema.name(rule.dependent) << ':' << shortest(rule.dependent_eps);
  return out.str();
}

QueryRange make_query_range(const DDRule& rule, std::span<const std::optional<double>> values,
                            double scale) {
  QueryRange q;
  q.attributes = rule.determinants;
  for (std::size_t k = 0; k < rule.determinants.size(); ++k) {
    const auto& v = values[rule.determinants[k]];
    if (!v) throw StateError("query range needs every determinant value");
    const double e = rule.determinant_eps[k] * scale;
    q.intervals.push_back({*v - e, *v + e});
  }
  return q;
}

QueryRange make_query_range(const DDRule& rule, std::span<const double> values, double scale) {
  QueryRange q;
  q.attributes = rule.determinants;
  for (std::size_t k = 0; k < rule.determinants.size(); ++k) {
    const double e = rule.determinant_eps[k] * scale;
    q.intervals.push_back({values[rule.determinants[k]] - e, values[rule.determinants[k]] + e});
  }
  return q;
}

std::vector<double> default_resolutions() {
  std::vector<double> r;
  const double lo = 1.0 / 64.0, hi = 1.0 / 4.0;
  for (int i = 0; i < 6; ++i) r.push_back(lo * std::pow(hi / lo, i / 5.0));
  return r;
}

FractalEstimate estimate_fractal_dimension(const Repository& repo,
                                           std::span<const AttrIndex> attributes,
                                           std::span<const double> resolutions) {
  if (repo.empty()) throw ConfigError("fractal dimension of an empty repository");
  if (resolutions.size() < 4) throw ConfigError("fractal fit needs at least 4 resolutions");
  FractalEstimate est;
  est.attributes.assign(attributes.begin(), attributes.end());
  est.resolutions = resolutions.size();

  bool identical = true;
  for (std::size_t i = 1; i < repo.size() && identical; ++i)
    for (auto a : attributes)
      if (repo.value(i, a) != repo.value(0, a)) {
        identical = false;
        break;
      }
  if (identical) {
    est.degenerate = true;
    return est;
  }

  const double n = static_cast<double>(repo.size());
  std::vector<double> xs, ys;
  std::vector<std::int64_t> key(attributes.size());
  for (double r : resolutions) {
    std::unordered_map<std::vector<std::int64_t>, std::size_t, VecHash> cells;
    for (std::size_t i = 0; i < repo.size(); ++i) {
      for (std::size_t k = 0; k < attributes.size(); ++k)
        key[k] = static_cast<std::int64_t>(std::floor(repo.value(i, attributes[k]) / r));
      ++cells[key];
    }
    double sum_sq = 0.0;
    for (const auto& [k, c] : cells) sum_sq += (c / n) * (c / n);
    xs.push_back(std::log(r));
    ys.push_back(std::log(sum_sq));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  est.d2 = std::clamp(slope, 0.0, static_cast<double>(attributes.size()));
  return est;
}

double fractal_count(double vol_ratio, double n_box, double d2, double eps, std::size_t dimensions) {
  if (n_box <= 1.0 || dimensions == 0) return 0.0;
  const double n = static_cast<double>(dimensions);
  return std::pow(vol_ratio, d2 / n) * (n_box - 1.0) * std::pow(2.0, d2) * std::pow(eps, d2);
}

double estimate_count(const QueryRange& range, const FractalEstimate& fractal, double n_box) {
  const std::size_t n = range.dimensions();
  if (n == 0) return std::max(0.0, n_box - 1.0);
  double half_diag_sq = 0.0, vol_q = 1.0;
  for (const auto& iv : range.intervals) {
    const double h = iv.width() / 2.0;
    half_diag_sq += h * h;
    vol_q *= iv.width();
  }
  const double eps = std::sqrt(half_diag_sq);
  if (eps == 0.0) return fractal.d2 == 0.0 ? std::max(0.0, n_box - 1.0) : 0.0;
  const double vol_cube = std::pow(2.0 * eps / std::sqrt(static_cast<double>(n)), static_cast<double>(n));
  return fractal_count(vol_q / vol_cube, n_box, fractal.d2, eps, n);
}

double estimate_count(const Repository& repo, const QueryRange& range,
                      const FractalEstimate& fractal) {
  return estimate_count(range, fractal, static_cast<double>(repo.size()));
}

std::size_t ImputationLattice::node_count() const {
  std::size_t n = 0;
  for (const auto& lvl : levels_) n += lvl.size();
  return n;
}

std::vector<AttrIndex> ImputationLattice::key_attributes() const {
  return levels_.back().front().rule.determinants;
}

ImputationLattice build_lattice(std::span<const DDRule> rules, const Repository& repo,
                                std::span<const double> resolutions) {
  if (rules.empty()) throw ConfigError("lattice needs at least one rule");
  if (rules.size() > 16) throw ConfigError("lattice supports at most 16 base rules");
  for (const auto& r : rules) {
    r.validate(repo.dimensions());
    if (r.dependent != rules.front().dependent)
      throw SchemaError("lattice rules must share one dependent attribute");
  }
  ImputationLattice lat;
  lat.dependent_ = rules.front().dependent;
  lat.base_.assign(rules.begin(), rules.end());
  const std::size_t l = rules.size();
  lat.levels_.resize(l);

  const auto centroid = repo.centroid();
  std::map<std::vector<AttrIndex>, FractalEstimate> fractal_cache;
  for (std::uint32_t mask = 1; mask < (1u << l); ++mask) {
    LatticeNode node;
    for (std::size_t i = 0; i < l; ++i)
      if (mask & (1u << i)) node.members.push_back(i);
    node.rule = combine(lat.base_, node.members);
    auto it = fractal_cache.find(node.rule.determinants);
    if (it == fractal_cache.end())
      it = fractal_cache
               .emplace(node.rule.determinants,
                        estimate_fractal_dimension(repo, node.rule.determinants, resolutions))
               .first;
    node.fractal = it->second;
    node.offline_count = estimate_count(repo, make_query_range(node.rule, centroid), node.fractal);
    lat.levels_[node.members.size() - 1].push_back(std::move(node));
  }
  for (auto& level : lat.levels_) {
    std::stable_sort(level.begin(), level.end(), [](const LatticeNode& a, const LatticeNode& b) {
      const bool a_ok = a.offline_count >= 1.0, b_ok = b.offline_count >= 1.0;
      if (a_ok != b_ok) return a_ok;
      return a_ok ? a.offline_count < b.offline_count : a.offline_count > b.offline_count;
    });
  }
  return lat;
}

namespace {

bool uses_missing(const DDRule& rule, const IncompleteObject& obj) {
  return std::any_of(rule.determinants.begin(), rule.determinants.end(),
                     [&](AttrIndex a) { return obj.is_missing(a); });
}

// Applicable nodes in traversal order: level l down to 1, each level in its
// precomputed order.
std::vector<std::pair<std::size_t, std::size_t>> applicable_nodes(const ImputationLattice& lat,
                                                                  const IncompleteObject& obj) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t level = lat.level_count(); level >= 1; --level) {
    const auto& nodes = lat.levels()[level - 1];
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!uses_missing(nodes[i].rule, obj)) out.emplace_back(level, i);
  }
  return out;
}

}  // namespace

std::optional<RuleSelection> select_rule(const ImputationLattice& lattice,
                                         const IncompleteObject& obj, double n_box) {
  for (auto [level, i] : applicable_nodes(lattice, obj)) {
    const auto& node = lattice.node(level, i);
    QueryRange q = make_query_range(node.rule, obj.values);
    const double est = estimate_count(q, node.fractal, n_box);
    if (est >= 1.0) return RuleSelection{level, i, std::move(q), est};
  }
  return std::nullopt;
}

ImputationIndex build_index_for_rules(std::shared_ptr<const Repository> repo,
                                      const ImputationLattice& lattice, const IndexConfig& config) {
  if (config.leaf_capacities.empty()) throw ConfigError("no leaf capacities configured");
  const auto keys = lattice.key_attributes();

  std::vector<QueryRange> samples;
  std::mt19937_64 rng(config.sample_seed + lattice.dependent());
  std::uniform_int_distribution<std::size_t> pick(0, repo->size() - 1);
  for (std::size_t s = 0; s < config.cluster_samples && !repo->empty(); ++s) {
    const auto row = repo->row(pick(rng));
    for (const auto& rule : lattice.base_rules()) samples.push_back(make_query_range(rule, row));
  }
  std::vector<Clustering> candidates;
  for (auto cap : config.leaf_capacities) candidates.push_back(str_clusters(*repo, keys, cap));
  const std::size_t best = select_clusters(*repo, candidates, samples);
  return ImputationIndex::build(std::move(repo), keys, lattice.dependent(), config.lambda,
                                candidates[best], config.fanout);
}

std::shared_ptr<const ImputationModel> ImputationModel::build(std::shared_ptr<const Repository> repo,
                                                              std::vector<DDRule> rules,
                                                              IndexConfig index_config,
                                                              ImputerConfig imputer_config) {
  if (!repo || repo->empty()) throw ConfigError("imputation needs a non-empty repository");
  std::shared_ptr<ImputationModel> model(new ImputationModel());
  model->repo_ = repo;
  model->imputer_config_ = imputer_config;
  const std::size_t d = repo->dimensions();
  std::map<AttrIndex, std::vector<DDRule>> by_dependent;
  for (const auto& r : rules) {
    r.validate(d);
    by_dependent[r.dependent].push_back(r);
  }
  model->rules_ = std::move(rules);
  model->lattices_.resize(d);
  model->indexes_.resize(d);
  for (auto& [dep, group] : by_dependent) {
    model->lattices_[dep] = build_lattice(group, *repo);
    model->indexes_[dep] = build_index_for_rules(repo, *model->lattices_[dep], index_config);
  }
  return model;
}

const ImputationLattice* ImputationModel::lattice(AttrIndex dependent) const {
  if (dependent >= lattices_.size() || !lattices_[dependent]) return nullptr;
  return &*lattices_[dependent];
}

const ImputationIndex* ImputationModel::index(AttrIndex dependent) const {
  if (dependent >= indexes_.size() || !indexes_[dependent]) return nullptr;
  return &*indexes_[dependent];
}

ImputedObject ImputationModel::range_state(const IncompleteObject& obj) const {
  obj.validate();
  if (obj.dimensions() != repo_->dimensions()) throw SchemaError("object arity differs from repository");
  if (obj.missing_count() == 0) return ImputedObject::from_complete(obj);
  ImputedObject out;
  out.source = obj;
  out.state = ImputationState::kRange;
  std::vector<Interval> dims;
  for (const auto& v : obj.values) dims.push_back(v ? Interval{*v, *v} : Interval{0.0, 1.0});
  out.mbr = Mbr(std::move(dims));
  return out;
}

bool ImputationModel::to_node_state(ImputedObject& obj, ImputationStats* stats) const {
  if (obj.state != ImputationState::kRange || obj.unimputable) return false;
  const double n_box = static_cast<double>(repo_->size());
  Mbr box = obj.mbr;
  std::vector<NodeRef> refs;
  for (auto attr : obj.source.missing_attributes()) {
    const auto* lat = lattice(attr);
    if (!lat) return false;
    auto sel = select_rule(*lat, obj.source, n_box);
    if (!sel) return false;
    const auto f = index(attr)->frontier(sel->range);
    if (stats) ++stats->frontier_queries;
    if (f.guaranteed == 0) return false;
    box[attr] = f.dependent_span;
    for (const auto& e : f.entries) refs.push_back({attr, e.node});
  }
  obj.mbr = std::move(box);
  obj.node_refs = std::move(refs);
  obj.state = ImputationState::kNode;
  return true;
}

AttributeCandidates ImputationModel::impute_attribute(const IncompleteObject& obj, AttrIndex attr,
                                                      ImputationStats* stats) const {
  AttributeCandidates out;
  out.attribute = attr;
  const auto* lat = lattice(attr);
  if (!lat) return out;
  const auto* idx = index(attr);
  const auto order = applicable_nodes(*lat, obj);
  std::size_t start = 0;
  if (auto sel = select_rule(*lat, obj, static_cast<double>(repo_->size()))) {
    for (std::size_t p = 0; p < order.size(); ++p)
      if (order[p] == std::pair(sel->level, sel->index)) start = p;
  }
  for (std::size_t p = start; p < order.size(); ++p) {
    if (p > start && stats) ++stats->fallback_nodes;
    const auto& node = lat->node(order[p].first, order[p].second);
    double scale = 1.0;
    for (int k = 0; k <= imputer_config_.max_widenings; ++k, scale *= 2.0) {
      if (k > 0 && stats) ++stats->widenings;
      const auto res = idx->range_query(make_query_range(node.rule, obj.values, scale));
      if (stats) ++stats->range_queries;
      if (res.rows.empty()) continue;
      std::vector<double> values;
      values.reserve(res.rows.size());
      for (auto r : res.rows) values.push_back(repo_->value(r, attr));
      out.candidates = normalize_candidates(values, imputer_config_.max_candidates,
                                            imputer_config_.merge_tolerance);
      return out;
    }
  }
  return out;
}

void ImputationModel::to_instance_state(ImputedObject& obj, ImputationStats* stats) const {
  if (obj.state == ImputationState::kInstance || obj.unimputable) return;
  std::vector<AttributeCandidates> cands;
  for (auto attr : obj.source.missing_attributes()) {
    auto c = impute_attribute(obj.source, attr, stats);
    if (c.candidates.empty()) {
      obj.unimputable = true;
      if (stats) ++stats->unimputable;
      return;
    }
    cands.push_back(std::move(c));
  }
  obj.instances = build_instances(obj.source, cands);
  obj.candidates = std::move(cands);
  obj.mbr = bounding_box(obj.instances, obj.source.dimensions());
  obj.node_refs.clear();
  obj.state = ImputationState::kInstance;
}

ImputedObject ImputationModel::impute(const IncompleteObject& obj, ImputationStats* stats) const {
  ImputedObject out = range_state(obj);
  to_instance_state(out, stats);
  return out;
}

}  // namespace joinids
