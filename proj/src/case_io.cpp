#include "gridflow/case_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gridflow/error.hpp"
#include "gridflow/powerflow.hpp"

namespace gridflow {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

std::string where(const Position& p) {
  return "line " + std::to_string(p.line) + ", column " + std::to_string(p.column);
}

struct MatrixRow {
  std::vector<double> values;
  Position start;
};

struct Section {
  std::vector<MatrixRow> rows;
  Position start;
};

// Character cursor with line/column tracking and `%` comment skipping.
class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool done() const { return i_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[i_]; }
  Position pos() const { return pos_; }

  char get() {
    const char c = text_[i_++];
    if (c == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    return c;
  }

  void skip_comment() {
    while (!done() && peek() != '\n') get();
  }

  // Skips blanks and comments, but not newlines.
  void skip_inline_space() {
    while (!done()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
        get();
      } else if (c == '%') {
        skip_comment();
      } else if (c == '.' && text_.substr(i_, 3) == "...") {
        skip_comment();  // line continuation
        if (!done()) get();
      } else {
        break;
      }
    }
  }

  void skip_space() {
    while (!done()) {
      skip_inline_space();
      if (peek() == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  std::string_view take_while(auto pred) {
    const std::size_t begin = i_;
    while (!done() && pred(peek())) get();
    return text_.substr(begin, i_ - begin);
  }

 private:
  std::string_view text_;
  std::size_t i_ = 0;
  Position pos_;
};

bool is_ident(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

double to_number(std::string_view token, const Position& at) {
  double value = 0.0;
  std::string_view t = token;
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw Error(ErrorCode::MalformedNumber,
                "malformed number '" + std::string(token) + "' at " + where(at),
                at.line);
  }
  return value;
}

Section parse_matrix(Cursor& cur) {
  Section section;
  section.start = cur.pos();
  MatrixRow row;
  auto flush = [&] {
    if (!row.values.empty()) section.rows.push_back(std::move(row));
    row = MatrixRow{};
  };
  while (true) {
    cur.skip_inline_space();
    if (cur.done()) {
      throw Error(ErrorCode::MissingSection,
                  "unterminated matrix starting at " + where(section.start),
                  section.start.line);
    }
    const char c = cur.peek();
    if (c == ']') {
      cur.get();
      flush();
      return section;
    }
    if (c == ';' || c == '\n') {
      cur.get();
      flush();
      continue;
    }
    const Position at = cur.pos();
    const std::string_view token = cur.take_while([](char ch) {
      return !(ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == ',' ||
               ch == ';' || ch == ']' || ch == '%');
    });
    if (row.values.empty()) row.start = at;
    row.values.push_back(to_number(token, at));
  }
}

// Skips a value we do not interpret: cell arrays, strings, expressions.
void skip_value(Cursor& cur) {
  int depth = 0;
  bool in_string = false;
  while (!cur.done()) {
    const char c = cur.peek();
    if (in_string) {
      cur.get();
      if (c == '\'') in_string = false;
      continue;
    }
    if (c == '%') {
      cur.skip_comment();
      continue;
    }
    if (c == '\'') {
      in_string = true;
    } else if (c == '[' || c == '{' || c == '(') {
      ++depth;
    } else if (c == ']' || c == '}' || c == ')') {
      --depth;
    } else if ((c == ';' || c == '\n') && depth <= 0) {
      cur.get();
      return;
    }
    cur.get();
  }
}

int as_int(double v) { return static_cast<int>(std::lround(v)); }

const Section& require(const std::map<std::string, Section>& sections,
                       const std::string& name, std::size_t columns) {
  auto it = sections.find(name);
  if (it == sections.end()) {
    throw Error(ErrorCode::MissingSection, "missing section mpc." + name);
  }
  for (const auto& row : it->second.rows) {
    if (row.values.size() < columns) {
      throw Error(ErrorCode::RowTooShort,
                  "mpc." + name + " row at " + where(row.start) + " has " +
                      std::to_string(row.values.size()) + " columns, need " +
                      std::to_string(columns),
                  row.start.line);
    }
  }
  return it->second;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RawCase parse_matpower(std::string_view text) {
  Cursor cur(text);
  std::map<std::string, Section> sections;
  std::optional<double> base_mva;

  while (true) {
    cur.skip_space();
    if (cur.done()) break;
    const Position at = cur.pos();
    const std::string_view ident = cur.take_while(is_ident);
    if (ident.empty()) {
      skip_value(cur);
      continue;
    }
    if (ident == "function") {
      cur.skip_comment();
      continue;
    }
    cur.skip_inline_space();
    if (cur.peek() != '=' || ident.substr(0, 4) != "mpc.") {
      skip_value(cur);
      continue;
    }
    cur.get();  // '='
    cur.skip_space();
    const std::string name(ident.substr(4));
    if (name == "bus" || name == "gen" || name == "branch") {
      if (cur.peek() != '[') {
        throw Error(ErrorCode::MissingSection,
                    "mpc." + name + " at " + where(at) +
                        " is not a matrix literal",
                    at.line);
      }
      cur.get();
      sections[name] = parse_matrix(cur);
      skip_value(cur);  // trailing ';'
    } else if (name == "baseMVA") {
      const Position num_at = cur.pos();
      const std::string_view token = cur.take_while([](char ch) {
        return !(ch == ';' || ch == '\n' || ch == ' ' || ch == '\t' ||
                 ch == '\r' || ch == '%');
      });
      base_mva = to_number(token, num_at);
      skip_value(cur);
    } else {
      skip_value(cur);
    }
  }

  if (!base_mva) throw Error(ErrorCode::MissingSection, "missing mpc.baseMVA");
  const Section& bus = require(sections, "bus", kBusColumns);
  const Section& gen = require(sections, "gen", kGenColumns);
  const Section& branch = require(sections, "branch", kBranchColumns);

  RawCase raw;
  raw.base_mva = *base_mva;
  for (const auto& row : bus.rows) {
    const auto& v = row.values;
    raw.buses.push_back({as_int(v[0]), as_int(v[1]), v[2], v[3], v[4], v[5],
                         as_int(v[6]), v[7], v[8], v[9], as_int(v[10]), v[11],
                         v[12]});
  }
  for (const auto& row : gen.rows) {
    const auto& v = row.values;
    raw.gens.push_back({as_int(v[0]), v[1], v[2], v[3], v[4], v[5], v[6],
                        as_int(v[7]), v[8], v[9]});
  }
  for (const auto& row : branch.rows) {
    const auto& v = row.values;
    raw.branches.push_back({as_int(v[0]), as_int(v[1]), v[2], v[3], v[4], v[5],
                            v[6], v[7], v[8], v[9], as_int(v[10]), v[11],
                            v[12]});
  }
  return raw;
}

RawCase read_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::FileNotFound, path + ": file not found or unreadable");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_matpower(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what(), e.line(), e.index());
  }
}

std::string write_matpower(const RawCase& raw, std::string_view name) {
  std::ostringstream out;
  out << "function mpc = " << name << "\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << fmt(raw.base_mva) << ";\n\n";
  out << "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
  out << "mpc.bus = [\n";
  for (const auto& b : raw.buses) {
    out << '\t' << b.id << '\t' << b.type << '\t' << fmt(b.pd) << '\t'
        << fmt(b.qd) << '\t' << fmt(b.gs) << '\t' << fmt(b.bs) << '\t' << b.area
        << '\t' << fmt(b.vm) << '\t' << fmt(b.va) << '\t' << fmt(b.base_kv)
        << '\t' << b.zone << '\t' << fmt(b.vmax) << '\t' << fmt(b.vmin) << ";\n";
  }
  out << "];\n\n";
  out << "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
  out << "mpc.gen = [\n";
  for (const auto& g : raw.gens) {
    out << '\t' << g.bus << '\t' << fmt(g.pg) << '\t' << fmt(g.qg) << '\t'
        << fmt(g.qmax) << '\t' << fmt(g.qmin) << '\t' << fmt(g.vg) << '\t'
        << fmt(g.mbase) << '\t' << g.status << '\t' << fmt(g.pmax) << '\t'
        << fmt(g.pmin) << ";\n";
  }
  out << "];\n\n";
  out << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n";
  out << "mpc.branch = [\n";
  for (const auto& br : raw.branches) {
    out << '\t' << br.from << '\t' << br.to << '\t' << fmt(br.r) << '\t'
        << fmt(br.x) << '\t' << fmt(br.b) << '\t' << fmt(br.rate_a) << '\t'
        << fmt(br.rate_b) << '\t' << fmt(br.rate_c) << '\t' << fmt(br.ratio)
        << '\t' << fmt(br.angle) << '\t' << br.status << '\t'
        << fmt(br.angmin) << '\t' << fmt(br.angmax) << ";\n";
  }
  out << "];\n";
  return out.str();
}

PowerSystemGraph to_graph(const RawCase& raw) {
  if (!(raw.base_mva > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "baseMVA must be positive");
  }
  constexpr int kIsolated = 4;

  // every referenced id must exist, in service or not
  std::map<int, std::size_t> row_of;
  for (std::size_t r = 0; r < raw.buses.size(); ++r) {
    if (!row_of.emplace(raw.buses[r].id, r).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate bus id " + std::to_string(raw.buses[r].id),
                  std::nullopt, r);
    }
  }
  for (std::size_t r = 0; r < raw.gens.size(); ++r) {
    if (!row_of.contains(raw.gens[r].bus)) {
      throw Error(ErrorCode::DanglingReference,
                  "generator row " + std::to_string(r + 1) +
                      " references unknown bus " + std::to_string(raw.gens[r].bus),
                  std::nullopt, r);
    }
  }
  for (std::size_t r = 0; r < raw.branches.size(); ++r) {
    const auto& br = raw.branches[r];
    for (int id : {br.from, br.to}) {
      if (!row_of.contains(id)) {
        throw Error(ErrorCode::DanglingReference,
                    "branch row " + std::to_string(r + 1) +
                        " references unknown bus " + std::to_string(id),
                    std::nullopt, r);
      }
    }
  }

  PowerSystemGraph g;
  g.base_mva = raw.base_mva;
  const double base = raw.base_mva;
  std::map<int, int> index_of;
  for (const auto& b : raw.buses) {
    if (b.type == kIsolated) continue;
    if (b.type < 1 || b.type > 3) {
      throw Error(ErrorCode::InvalidArgument,
                  "bus " + std::to_string(b.id) + " has invalid type " +
                      std::to_string(b.type));
    }
    index_of[b.id] = static_cast<int>(g.buses.size());
    Bus bus;
    bus.id = b.id;
    bus.type = static_cast<BusType>(b.type);
    bus.pd = b.pd / base;
    bus.qd = b.qd / base;
    bus.gs = b.gs / base;
    bus.bs = b.bs / base;
    bus.vm0 = b.vm;
    bus.va0 = b.va * kDegToRad;
    bus.base_kv = b.base_kv;
    g.buses.push_back(bus);
  }
  const std::size_t n = g.buses.size();
  g.gens.assign(n, Generation{});

  for (const auto& gen : raw.gens) {
    if (gen.status <= 0) continue;
    auto it = index_of.find(gen.bus);
    if (it == index_of.end()) continue;  // unit on an isolated bus
    Generation& agg = g.gens[it->second];
    if (agg.units == 0) agg.vset = gen.vg;
    ++agg.units;
    agg.pg += gen.pg / base;
    agg.qg += gen.qg / base;
  }

  for (std::size_t r = 0; r < raw.branches.size(); ++r) {
    const auto& br = raw.branches[r];
    if (br.status <= 0) continue;
    auto f = index_of.find(br.from);
    auto t = index_of.find(br.to);
    if (f == index_of.end() || t == index_of.end()) continue;
    if (f->second == t->second) {
      throw Error(ErrorCode::InvalidArgument,
                  "branch row " + std::to_string(r + 1) + " is a self loop",
                  std::nullopt, r);
    }
    if (br.r * br.r + br.x * br.x == 0.0) {
      throw Error(ErrorCode::ZeroImpedance,
                  "branch row " + std::to_string(r + 1) + " (" +
                      std::to_string(br.from) + "-" + std::to_string(br.to) +
                      ") has zero impedance",
                  std::nullopt, r);
    }
    Branch e;
    e.from = f->second;
    e.to = t->second;
    e.r = br.r;
    e.x = br.x;
    e.b = br.b;
    e.tap = br.ratio == 0.0 ? 1.0 : br.ratio;
    e.shift = br.angle * kDegToRad;
    e.source_row = r;
    g.edges.push_back(e);
  }
  g.rebuild_adjacency();

  for (std::size_t i = 0; i < n; ++i) {
    Bus& bus = g.buses[i];
    if (bus.type == BusType::Slack) {
      if (g.slack >= 0) {
        throw Error(ErrorCode::MultipleSlack,
                    "buses " + std::to_string(g.buses[g.slack].id) + " and " +
                        std::to_string(bus.id) + " are both slack",
                    std::nullopt, i);
      }
      g.slack = static_cast<int>(i);
    }
  }
  if (g.slack < 0) throw Error(ErrorCode::NoSlack, "case has no slack bus");
  if (g.gens[g.slack].units == 0) {
    throw Error(ErrorCode::MissingGenerator,
                "slack bus " + std::to_string(g.buses[g.slack].id) +
                    " has no in-service generator",
                std::nullopt, static_cast<std::size_t>(g.slack));
  }
  for (auto& bus : g.buses) {
    // voltage control needs a unit on line; demote like MATPOWER does
    if (bus.type == BusType::PV && g.gens[&bus - g.buses.data()].units == 0) {
      bus.type = BusType::PQ;
    }
  }

  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(g.slack);
  seen[g.slack] = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int e : g.adjacency[i]) {
      const int j = g.other_end(e, i);
      if (!seen[j]) {
        seen[j] = 1;
        frontier.push(j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::IslandDetected,
                  "bus " + std::to_string(g.buses[i].id) +
                      " is not connected to the slack bus",
                  std::nullopt, i);
    }
  }
  return g;
}

// ---- solutions --------------------------------------------------------

SolutionReport make_report(const PowerSystemGraph& graph,
                           const PowerFlowSolution& sol) {
  const double base = graph.base_mva;
  SolutionReport r;
  r.converged = sol.converged;
  r.method = std::string(to_string(sol.method_used));
  r.iterations = sol.iterations;
  r.max_mismatch = sol.max_mismatch;
  r.base_mva = base;
  r.slack_p_mw = sol.slack_p * base;
  r.slack_q_mvar = sol.slack_q * base;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    r.buses.push_back({graph.buses[i].id, sol.vm[i], sol.va[i] / kDegToRad});
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Branch& br = graph.edges[e];
    const BranchFlow& f = sol.flows[e];
    r.branches.push_back({static_cast<int>(br.source_row + 1),
                          graph.buses[br.from].id, graph.buses[br.to].id,
                          f.pf * base, f.qf * base, f.pt * base, f.qt * base});
  }
  r.mismatch_trace = sol.mismatch_trace;
  return r;
}

std::string write_solution(const SolutionReport& r, SolutionFormat format) {
  if (format == SolutionFormat::Json) {
    nlohmann::ordered_json j;
    j["converged"] = r.converged;
    j["method"] = r.method;
    j["iterations"] = r.iterations;
    j["iteration_convention"] =
        r.method == "newton" ? "one Newton step"
                             : "one P-theta half plus one Q-V half";
    j["max_mismatch_pu"] = r.max_mismatch;
    j["base_mva"] = r.base_mva;
    j["slack"] = {{"p_mw", r.slack_p_mw}, {"q_mvar", r.slack_q_mvar}};
    auto& buses = j["buses"] = nlohmann::ordered_json::array();
    for (const auto& b : r.buses) {
      buses.push_back({{"bus", b.bus}, {"vm_pu", b.vm_pu}, {"va_deg", b.va_deg}});
    }
    auto& branches = j["branches"] = nlohmann::ordered_json::array();
    for (const auto& br : r.branches) {
      branches.push_back({{"index", br.index},
                          {"from", br.from},
                          {"to", br.to},
                          {"p_from_mw", br.p_from_mw},
                          {"q_from_mvar", br.q_from_mvar},
                          {"p_to_mw", br.p_to_mw},
                          {"q_to_mvar", br.q_to_mvar}});
    }
    j["mismatch_trace"] = r.mismatch_trace;
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  out << "# converged=" << (r.converged ? 1 : 0) << " method=" << r.method
      << " iterations=" << r.iterations
      << " max_mismatch_pu=" << fmt(r.max_mismatch)
      << " base_mva=" << fmt(r.base_mva) << " slack_p_mw=" << fmt(r.slack_p_mw)
      << " slack_q_mvar=" << fmt(r.slack_q_mvar) << "\n";
  out << "# mismatch_trace=";
  for (std::size_t k = 0; k < r.mismatch_trace.size(); ++k) {
    out << (k ? ";" : "") << fmt(r.mismatch_trace[k]);
  }
  out << "\n";
  out << "bus,vm_pu,va_deg\n";
  for (const auto& b : r.buses) {
    out << b.bus << ',' << fmt(b.vm_pu) << ',' << fmt(b.va_deg) << '\n';
  }
  out << "\nindex,from,to,p_from_mw,q_from_mvar,p_to_mw,q_to_mvar\n";
  for (const auto& br : r.branches) {
    out << br.index << ',' << br.from << ',' << br.to << ',' << fmt(br.p_from_mw)
        << ',' << fmt(br.q_from_mvar) << ',' << fmt(br.p_to_mw) << ','
        << fmt(br.q_to_mvar) << '\n';
  }
  return out.str();
}

std::string write_solution(const PowerSystemGraph& graph,
                           const PowerFlowSolution& solution,
                           SolutionFormat format) {
  return write_solution(make_report(graph, solution), format);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double num(const std::string& s) { return to_number(s, Position{}); }

SolutionReport read_csv(std::string_view text) {
  SolutionReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  enum class Part { Header, Buses, Branches } part = Part::Header;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# mismatch_trace=", 0) == 0) {
      const std::string list = line.substr(17);
      for (const auto& v : split(list, ';')) {
        if (!v.empty()) r.mismatch_trace.push_back(num(v));
      }
    } else if (line.rfind("# ", 0) == 0) {
      for (const auto& kv : split(line.substr(2), ' ')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "converged") r.converged = value == "1";
        else if (key == "method") r.method = value;
        else if (key == "iterations") r.iterations = std::stoi(value);
        else if (key == "max_mismatch_pu") r.max_mismatch = num(value);
        else if (key == "base_mva") r.base_mva = num(value);
        else if (key == "slack_p_mw") r.slack_p_mw = num(value);
        else if (key == "slack_q_mvar") r.slack_q_mvar = num(value);
      }
    } else if (line.rfind("bus,", 0) == 0) {
      part = Part::Buses;
    } else if (line.rfind("index,", 0) == 0) {
      part = Part::Branches;
    } else {
      const auto f = split(line, ',');
      if (part == Part::Buses && f.size() == 3) {
        r.buses.push_back({std::stoi(f[0]), num(f[1]), num(f[2])});
      } else if (part == Part::Branches && f.size() == 7) {
        r.branches.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]),
                              num(f[3]), num(f[4]), num(f[5]), num(f[6])});
      } else {
        throw Error(ErrorCode::MalformedNumber, "unexpected CSV line: " + line);
      }
    }
  }
  return r;
}

}  // namespace

SolutionReport read_solution(std::string_view text, SolutionFormat format) {
  if (format == SolutionFormat::Csv) return read_csv(text);
  const auto j = nlohmann::json::parse(text);
  SolutionReport r;
  r.converged = j.at("converged").get<bool>();
  r.method = j.at("method").get<std::string>();
  r.iterations = j.at("iterations").get<int>();
  r.max_mismatch = j.at("max_mismatch_pu").get<double>();
  r.base_mva = j.at("base_mva").get<double>();
  r.slack_p_mw = j.at("slack").at("p_mw").get<double>();
  r.slack_q_mvar = j.at("slack").at("q_mvar").get<double>();
  for (const auto& b : j.at("buses")) {
    r.buses.push_back({b.at("bus").get<int>(), b.at("vm_pu").get<double>(),
                       b.at("va_deg").get<double>()});
  }
  for (const auto& br : j.at("branches")) {
    r.branches.push_back(
        {br.at("index").get<int>(), br.at("from").get<int>(),
         br.at("to").get<int>(), br.at("p_from_mw").get<double>(),
         br.at("q_from_mvar").get<double>(), br.at("p_to_mw").get<double>(),
         br.at("q_to_mvar").get<double>()});
  }
  r.mismatch_trace = j.at("mismatch_trace").get<std::vector<double>>();
  return r;
}

}  // namespace gridflow
