#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "gridflow/case_io.hpp"
#include "gridflow/error.hpp"
#include "gridflow/powerflow.hpp"
#include "gridflow/symbolic.hpp"

namespace gridflow::cli {
namespace {

Ordering parse_order(const std::string& s) {
  if (s == "natural") return Ordering::Natural;
  if (s == "mindeg") return Ordering::MinDegree;
  throw Error(ErrorCode::InvalidArgument, "unknown ordering '" + s + "'");
}

Method parse_method(const std::string& s) {
  if (s == "newton") return Method::Newton;
  if (s == "fd" || s == "fast_decoupled") return Method::FastDecoupled;
  if (s == "auto") return Method::Auto;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + s + "'");
}

PowerSystemGraph load(const std::string& path) {
  return to_graph(read_case_file(path));
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FileNotFound, path + ": cannot write file");
  f << text;
}

void print_summary(std::ostream& os, const PowerFlowSolution& sol,
                   const std::string& case_path) {
  os << "case            " << case_path << "\n"
     << "status          " << (sol.converged ? "converged" : "NOT converged")
     << "\n"
     << "method          " << to_string(sol.method_used) << "\n"
     << "iterations      " << sol.iterations;
  if (sol.fd_iterations > 0 && sol.newton_iterations > 0) {
    os << " (fast decoupled " << sol.fd_iterations << ", newton "
       << sol.newton_iterations << ")";
  }
  os << "\n"
     << "max mismatch    " << std::scientific << std::setprecision(3)
     << sol.max_mismatch << " p.u.\n"
     << std::defaultfloat << "wall time       " << std::fixed
     << std::setprecision(3) << sol.times.total_ms << " ms\n"
     << std::defaultfloat;
}

void print_table(std::ostream& os, const SolutionReport& r) {
  os << "\n   bus     vm_pu     va_deg\n";
  for (const auto& b : r.buses) {
    os << std::setw(6) << b.bus << std::fixed << std::setprecision(5)
       << std::setw(10) << b.vm_pu << std::setprecision(4) << std::setw(11)
       << b.va_deg << "\n";
  }
  os << "\n  row  from    to   p_from_mw q_from_mvar     p_to_mw   q_to_mvar\n";
  for (const auto& br : r.branches) {
    os << std::setw(5) << br.index << std::setw(6) << br.from << std::setw(6)
       << br.to << std::setprecision(3) << std::setw(12) << br.p_from_mw
       << std::setw(12) << br.q_from_mvar << std::setw(12) << br.p_to_mw
       << std::setw(12) << br.q_to_mvar << "\n";
  }
  os << "\nslack generation " << std::setprecision(3) << r.slack_p_mw << " MW, "
     << r.slack_q_mvar << " MVAr\n"
     << std::defaultfloat;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

int cmd_solve(const SolveOptions& o, std::ostream& out, std::ostream& err) {
  try {
    PowerFlowConfig config;
    config.method = parse_method(o.method);
    config.ordering = parse_order(o.order);
    config.tol = o.tol;
    if (o.max_iter) config.newton_max_iter = config.fd_max_iter = *o.max_iter;
    config.flat_start = o.flat_start;
    config.threads = o.threads;
    if (o.output != "table" && o.output != "json" && o.output != "csv") {
      throw Error(ErrorCode::InvalidArgument, "unknown output '" + o.output + "'");
    }

    const PowerSystemGraph graph = load(o.case_path);
    const PowerFlowSolution sol = solve_power_flow(graph, config);
    const SolutionReport report = make_report(graph, sol);

    std::string payload;
    if (o.output == "json") payload = write_solution(report, SolutionFormat::Json);
    if (o.output == "csv") payload = write_solution(report, SolutionFormat::Csv);

    if (!o.out_file.empty()) {
      if (o.output == "table") {
        std::ostringstream table;
        print_summary(table, sol, o.case_path);
        print_table(table, report);
        payload = table.str();
      }
      write_file(o.out_file, payload);
      print_summary(out, sol, o.case_path);
    } else if (o.output == "table") {
      print_summary(out, sol, o.case_path);
      print_table(out, report);
    } else {
      out << payload;
      print_summary(err, sol, o.case_path);
    }
    return sol.converged ? kConverged : kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

int cmd_symbolic(const SymbolicOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const PowerSystemGraph graph = load(o.case_path);
    const Scheduler scheduler(o.threads > 0 ? o.threads : default_workers());
    const PatternGraph pattern = graph.pattern();
    const SymbolicAnalysis a = analyze(pattern, parse_order(o.order), scheduler);

    out << "buses           " << a.size() << "\n"
        << "ordering        " << o.order << "\n"
        << "original edges  " << pattern.edge_count() << "\n"
        << "fill edges      " << a.fill_edges.size() << "\n"
        << "tree height     " << a.height() << "\n"
        << "level widths   ";
    for (const auto& level : a.levels) out << ' ' << level.size();
    out << "\n";

    std::map<std::size_t, std::size_t> histogram;
    for (const auto& level : a.levels) ++histogram[level.size()];
    out << "width histogram";
    for (auto [width, count] : histogram) out << ' ' << width << 'x' << count;
    out << "\n";

    if (o.dump_levels) {
      out << "\nlevel  buses\n";
      for (std::size_t k = 0; k < a.levels.size(); ++k) {
        std::vector<int> ids;
        for (int node : a.levels[k]) ids.push_back(graph.buses[a.order[node]].id);
        std::sort(ids.begin(), ids.end());
        out << std::setw(5) << k + 1 << "  ";
        for (std::size_t t = 0; t < ids.size(); ++t) out << (t ? "," : "") << ids[t];
        out << "\n";
      }
    }
    return kConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.repeat < 1) {
      throw Error(ErrorCode::InvalidArgument, "--repeat must be at least 1");
    }
    const PowerSystemGraph graph = load(o.case_path);
    std::vector<int> thread_counts{1};
    for (int t : o.threads) {
      if (t < 1) throw Error(ErrorCode::InvalidArgument, "thread counts must be >= 1");
      if (std::find(thread_counts.begin(), thread_counts.end(), t) ==
          thread_counts.end()) {
        thread_counts.push_back(t);
      }
    }

    struct Row {
      std::string method;
      int threads;
      std::map<std::string, std::vector<double>> phases;
      std::size_t levels = 0, pooled_levels = 0;
      double pooled_ms = 0;
    };
    const std::vector<std::string> phase_names{"assembly", "symbolic", "factor",
                                               "solve", "total"};
    std::vector<Row> rows;
    bool all_converged = true, identical = true;

    for (const Method method : {Method::Newton, Method::FastDecoupled}) {
      std::string reference;
      for (int threads : thread_counts) {
        Row row{std::string(to_string(method)), threads, {}, 0, 0, 0};
        for (int k = 0; k < o.repeat; ++k) {
          PowerFlowConfig config;
          config.method = method;
          config.threads = threads;
          config.tol = o.tol;
          config.ordering = parse_order(o.order);
          config.level_hook = [&row](const LevelTiming& t) {
            ++row.levels;
            if (!t.inlined) {
              ++row.pooled_levels;
              row.pooled_ms += t.ms;
            }
          };
          const PowerFlowSolution sol = solve_power_flow(graph, config);
          all_converged = all_converged && sol.converged;
          const std::string text =
              write_solution(graph, sol, SolutionFormat::Json);
          if (reference.empty()) {
            reference = text;
          } else if (text != reference) {
            identical = false;
          }
          row.phases["assembly"].push_back(sol.times.assembly_ms);
          row.phases["symbolic"].push_back(sol.times.symbolic_ms);
          row.phases["factor"].push_back(sol.times.factor_ms);
          row.phases["solve"].push_back(sol.times.solve_ms);
          row.phases["total"].push_back(sol.times.total_ms);
        }
        rows.push_back(std::move(row));
      }
    }

    out << "# hardware-dependent timings; published reference timings are "
           "not normative\n";
    out << "# case " << o.case_path << ", " << graph.size() << " buses, "
        << graph.edges.size() << " branches, median of " << o.repeat
        << " runs\n\n";
    out << std::left << std::setw(16) << "method" << std::right << std::setw(8)
        << "threads";
    for (const auto& p : phase_names) out << std::setw(12) << (p + "_ms");
    out << std::setw(16) << "pooled_levels" << "\n";
    for (const auto& row : rows) {
      out << std::left << std::setw(16) << row.method << std::right
          << std::setw(8) << row.threads << std::fixed << std::setprecision(4);
      for (const auto& p : phase_names) {
        out << std::setw(12) << median(row.phases.at(p));
      }
      out << std::setw(16)
          << (std::to_string(row.pooled_levels / o.repeat) + "/" +
              std::to_string(row.levels / o.repeat))
          << std::defaultfloat << "\n";
    }
    out << "\nall runs converged: " << (all_converged ? "yes" : "no") << "\n";
    out << "solutions identical across runs and thread counts: "
        << (identical ? "yes" : "no") << "\n\n";

    std::ostringstream csv;
    csv << "phase,method,threads,ms\n";
    for (const auto& row : rows) {
      for (const auto& p : phase_names) {
        csv << p << ',' << row.method << ',' << row.threads << ','
            << median(row.phases.at(p)) << "\n";
      }
    }
    if (o.csv_file.empty()) {
      out << csv.str();
    } else {
      write_file(o.csv_file, csv.str());
      out << "csv written to " << o.csv_file << "\n";
    }
    return all_converged && identical ? kConverged : kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gridflow: graph-based AC power flow with level-scheduled LDU"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* s = app.add_subcommand("solve", "solve a MATPOWER case");
  s->add_option("case", solve.case_path, "MATPOWER case file")->required();
  s->add_option("--method", solve.method, "newton | fd | auto")
      ->check(CLI::IsMember({"newton", "fd", "auto"}));
  s->add_option("--tol", solve.tol, "max mismatch tolerance (p.u.)");
  s->add_option("--max-iter", solve.max_iter, "iteration limit per method");
  s->add_flag("--flat-start", solve.flat_start, "start from 1 p.u., 0 rad");
  s->add_option("--threads", solve.threads, "worker threads (0: default)");
  s->add_option("--order", solve.order, "natural | mindeg")
      ->check(CLI::IsMember({"natural", "mindeg"}));
  s->add_option("--output", solve.output, "table | json | csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  s->add_option("--out", solve.out_file, "write output to FILE");

  SymbolicOptions sym;
  auto* y = app.add_subcommand("symbolic", "report fill, tree height and levels");
  y->add_option("case", sym.case_path, "MATPOWER case file")->required();
  y->add_option("--order", sym.order, "natural | mindeg")
      ->check(CLI::IsMember({"natural", "mindeg"}));
  y->add_flag("--dump-levels", sym.dump_levels, "print the full level partition");
  y->add_option("--threads", sym.threads, "worker threads (0: default)");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "serial vs parallel phase timings");
  b->add_option("case", bench.case_path, "MATPOWER case file")->required();
  b->add_option("--repeat", bench.repeat, "runs per configuration");
  b->add_option("--threads", bench.threads, "comma-separated thread counts")
      ->delimiter(',');
  b->add_option("--order", bench.order, "natural | mindeg")
      ->check(CLI::IsMember({"natural", "mindeg"}));
  b->add_option("--tol", bench.tol, "max mismatch tolerance (p.u.)");
  b->add_option("--csv", bench.csv_file, "write CSV to FILE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kInputError;
  }
  if (s->parsed()) return cmd_solve(solve, out, err);
  if (y->parsed()) return cmd_symbolic(sym, out, err);
  return cmd_bench(bench, out, err);
}

}  // namespace gridflow::cli
