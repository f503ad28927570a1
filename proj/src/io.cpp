#include "joinids/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace joinids {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ParseError(where + ": bad number '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ParseError(where + ": bad integer '" + s + "'");
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

}  // namespace

StreamData read_stream_csv(const std::string& path, StreamId stream) {
  auto in = open_in(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(path + ": empty file");
  auto header = split(line);
  if (header.size() < 2 || header.front() != "timestamp")
    throw ParseError(path + ": header must start with 'timestamp'");
  StreamData out;
  out.schema = AttributeSchema(std::vector<std::string>(header.begin() + 1, header.end()));
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    auto cells = split(line);
    if (cells.size() != header.size()) throw ParseError(where + ": wrong field count");
    IncompleteObject o;
    o.stream = stream;
    o.timestamp = parse_int(cells[0], where);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j] == "-") o.values.emplace_back();
      else o.values.emplace_back(parse_double(cells[j], where));
    }
    o.validate();
    out.objects.push_back(std::move(o));
  }
  return out;
}

void write_stream_csv(const std::string& path, const AttributeSchema& schema,
                      const std::vector<IncompleteObject>& objects) {
  auto out = open_out(path);
  out << "timestamp";
  for (const auto& n : schema.names()) out << ',' << n;
  out << '\n';
  for (const auto& o : objects) {
    out << o.timestamp;
    for (const auto& v : o.values) {
      out << ',';
      if (v) out << *v;
      else out << '-';
    }
    out << '\n';
  }
}

RepositoryData read_repository_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(path + ": empty file");
  RepositoryData out;
  out.schema = AttributeSchema(split(line));
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    auto cells = split(line);
    if (cells.size() != out.schema.size()) throw ParseError(where + ": wrong field count");
    for (const auto& c : cells) {
      if (c == "-") throw ParseError(where + ": repository rows must be complete");
      out.rows.push_back(parse_double(c, where));
    }
  }
  return out;
}

void write_repository_csv(const std::string& path, const AttributeSchema& schema,
                          const std::vector<double>& rows) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < schema.size(); ++j) out << (j ? "," : "") << schema.name(j);
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); i += schema.size()) {
    for (std::size_t j = 0; j < schema.size(); ++j) out << (j ? "," : "") << rows[i + j];
    out << '\n';
  }
}

PairSet read_groundtruth_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  PairSet out;
  if (!next_line(in, line)) return out;
  if (split(line) != std::vector<std::string>{"timestamp_x", "timestamp_y"})
    throw ParseError(path + ": expected header timestamp_x,timestamp_y");
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    auto cells = split(line);
    if (cells.size() != 2) throw ParseError(where + ": wrong field count");
    out.emplace(parse_int(cells[0], where), parse_int(cells[1], where));
  }
  return out;
}

void write_groundtruth_csv(const std::string& path,
                           const std::vector<std::pair<Timestamp, Timestamp>>& pairs) {
  auto out = open_out(path);
  out << "timestamp_x,timestamp_y\n";
  for (const auto& [x, y] : pairs) out << x << ',' << y << '\n';
}

void write_delta(std::ostream& out, const JoinDelta& delta) {
  for (const auto& p : delta.removed)
    out << delta.t << ",-," << p.x << ',' << p.y << ',' << std::setprecision(17) << p.probability
        << '\n';
  for (const auto& p : delta.added)
    out << delta.t << ",+," << p.x << ',' << p.y << ',' << std::setprecision(17) << p.probability
        << '\n';
}

std::vector<JoinDelta> read_delta_log(std::istream& in) {
  std::vector<JoinDelta> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "delta log line " + std::to_string(line_no);
    auto cells = split(line);
    if (cells.size() != 5 || (cells[1] != "+" && cells[1] != "-"))
      throw ParseError(where + ": expected t,+|-,ts_x,ts_y,probability");
    const Timestamp t = parse_int(cells[0], where);
    if (out.empty() || out.back().t != t) {
      if (!out.empty() && t < out.back().t) throw ParseError(where + ": timestamps go backwards");
      out.push_back(JoinDelta{t, {}, {}, {}});
    }
    JoinPair p{parse_int(cells[2], where), parse_int(cells[3], where), parse_double(cells[4], where)};
    (cells[1] == "+" ? out.back().added : out.back().removed).push_back(p);
  }
  return out;
}

std::vector<JoinDelta> read_delta_log(const std::string& path) {
  auto in = open_in(path);
  return read_delta_log(in);
}

Replay replay(const std::vector<JoinDelta>& deltas) {
  Replay r;
  for (const auto& d : deltas) {
    for (const auto& p : d.removed)
      if (!r.final_set.erase(p.x, p.y))
        throw ParseError("delta at t=" + std::to_string(d.t) + " removes an absent pair");
    for (const auto& p : d.added) {
      r.final_set.add(p.x, p.y, p.probability);
      r.ever_added.emplace(p.x, p.y);
    }
    r.last_t = d.t;
  }
  return r;
}

double f1_score(double recall, double precision) {
  if (recall + precision <= 0.0) return 0.0;
  return 2.0 * recall * precision / (recall + precision);
}

Metrics compute_metrics(const PairSet& returned, const PairSet& expected) {
  Metrics m;
  m.returned = returned.size();
  m.expected = expected.size();
  for (const auto& p : returned)
    if (expected.count(p)) ++m.correct;
  m.recall = m.expected == 0 ? (m.returned == 0 ? 1.0 : 0.0)
                             : static_cast<double>(m.correct) / m.expected;
  m.precision = m.returned == 0 ? 0.0 : static_cast<double>(m.correct) / m.returned;
  if (m.expected == 0 && m.returned == 0) m.precision = 1.0;
  m.f1 = f1_score(m.recall, m.precision);
  return m;
}

PairSet final_window_pairs(const PairSet& pairs, Timestamp last_x, Timestamp last_y,
                           std::size_t window) {
  PairSet out;
  const auto w = static_cast<Timestamp>(window);
  for (const auto& p : pairs)
    if (p.first > last_x - w && p.first <= last_x && p.second > last_y - w && p.second <= last_y)
      out.insert(p);
  return out;
}

}  // namespace joinids
