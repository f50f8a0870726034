#pragma once

// MATPOWER case reading and solution writing.
//
// Only the matrix-literal subset of the format is accepted: `mpc.baseMVA`
// and bracketed `mpc.bus`, `mpc.gen`, `mpc.branch` tables. Other
// assignments (version strings, gencost, bus_name cells, ...) are skipped.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gridflow/netgraph.hpp"

namespace gridflow {

struct PowerFlowSolution;

struct BusRow {
  int id = 0;
  int type = 1;
  double pd = 0, qd = 0, gs = 0, bs = 0;
  int area = 1;
  double vm = 1, va = 0;  // p.u., degrees
  double base_kv = 0;
  int zone = 1;
  double vmax = 1.1, vmin = 0.9;
  friend bool operator==(const BusRow&, const BusRow&) = default;
};

struct GenRow {
  int bus = 0;
  double pg = 0, qg = 0, qmax = 0, qmin = 0, vg = 1, mbase = 100;
  int status = 1;
  double pmax = 0, pmin = 0;
  friend bool operator==(const GenRow&, const GenRow&) = default;
};

struct BranchRow {
  int from = 0, to = 0;
  double r = 0, x = 0, b = 0;
  double rate_a = 0, rate_b = 0, rate_c = 0;
  double ratio = 0, angle = 0;  // angle in degrees
  int status = 1;
  double angmin = -360, angmax = 360;
  friend bool operator==(const BranchRow&, const BranchRow&) = default;
};

struct RawCase {
  double base_mva = 0;
  std::vector<BusRow> buses;
  std::vector<GenRow> gens;
  std::vector<BranchRow> branches;
  friend bool operator==(const RawCase&, const RawCase&) = default;
};

inline constexpr std::size_t kBusColumns = 13;
inline constexpr std::size_t kGenColumns = 10;
inline constexpr std::size_t kBranchColumns = 13;

RawCase parse_matpower(std::string_view text);
/// Reads and parses a case file; error messages are prefixed with the path.
RawCase read_case_file(const std::string& path);
/// Emits a MATPOWER case text that parses back to an equal RawCase.
std::string write_matpower(const RawCase& raw, std::string_view name = "case");

/// Validates the raw case and builds the network graph: out-of-service
/// rows dropped, isolated (type 4) buses removed, values in per-unit and
/// radians, dense bus indices in file order.
PowerSystemGraph to_graph(const RawCase& raw);

// ---- solutions --------------------------------------------------------

enum class SolutionFormat { Json, Csv };

/// Solution in engineering units as written to disk.
struct SolutionReport {
  bool converged = false;
  std::string method;
  int iterations = 0;
  double max_mismatch = 0;  // p.u.
  double base_mva = 0;
  double slack_p_mw = 0, slack_q_mvar = 0;
  struct BusRecord {
    int bus;
    double vm_pu, va_deg;
    friend bool operator==(const BusRecord&, const BusRecord&) = default;
  };
  struct BranchRecord {
    int index;  // source row, 1-based
    int from, to;
    double p_from_mw, q_from_mvar, p_to_mw, q_to_mvar;
    friend bool operator==(const BranchRecord&, const BranchRecord&) = default;
  };
  std::vector<BusRecord> buses;
  std::vector<BranchRecord> branches;
  std::vector<double> mismatch_trace;
  friend bool operator==(const SolutionReport&, const SolutionReport&) = default;
};

SolutionReport make_report(const PowerSystemGraph& graph,
                           const PowerFlowSolution& solution);
std::string write_solution(const SolutionReport& report, SolutionFormat format);
std::string write_solution(const PowerSystemGraph& graph,
                           const PowerFlowSolution& solution,
                           SolutionFormat format);
SolutionReport read_solution(std::string_view text, SolutionFormat format);

}  // namespace gridflow
