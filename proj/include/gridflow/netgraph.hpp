#pragma once

// Attributed-graph network model: buses are vertices carrying load, shunt,
// generation and voltage attributes; branches are edges carrying their
// pi-model parameters. Admittances are stored the same way, y_ii on the
// vertex and the directed pair (y_ij, y_ji) on the edge.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "gridflow/scheduler.hpp"
#include "gridflow/symbolic.hpp"

namespace gridflow {

using Complex = std::complex<double>;

enum class BusType { PQ = 1, PV = 2, Slack = 3 };

struct Bus {
  int id = 0;  // external bus number
  BusType type = BusType::PQ;
  double pd = 0.0, qd = 0.0;  // p.u.
  double gs = 0.0, bs = 0.0;  // p.u. at 1 p.u. voltage
  double vm0 = 1.0;           // p.u.
  double va0 = 0.0;           // rad
  double base_kv = 0.0;
};

/// In-service generation aggregated per bus.
struct Generation {
  int units = 0;
  double pg = 0.0, qg = 0.0;  // p.u.
  double vset = 1.0;          // setpoint of the first in-service unit
};

struct Branch {
  int from = 0, to = 0;  // dense bus indices
  double r = 0.0, x = 0.0, b = 0.0;
  double tap = 1.0;    // 0 in the source is already mapped to 1
  double shift = 0.0;  // rad
  std::size_t source_row = 0;  // row in the case's branch table
};

struct PowerSystemGraph {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generation> gens;  // one slot per bus
  std::vector<Branch> edges;
  std::vector<std::vector<int>> adjacency;  // incident edge ids, ascending
  int slack = -1;

  std::size_t size() const noexcept { return buses.size(); }
  void rebuild_adjacency();
  /// Bus-level structural pattern (parallel branches collapse).
  PatternGraph pattern() const;
  /// Neighbor bus of bus `bus` across edge `e`.
  int other_end(int e, int bus) const {
    return edges[e].from == bus ? edges[e].to : edges[e].from;
  }
};

/// Terminal admittances of one branch's pi model.
struct BranchAdmittance {
  Complex ff, ft, tf, tt;
};

BranchAdmittance branch_admittance(const Branch& branch);

struct AdmittanceGraph {
  std::vector<Complex> diag;                 // y_ii per bus
  std::vector<BranchAdmittance> edge;        // per branch
  // Aggregated row of Y per bus: neighbors ascending, parallel edges summed.
  struct Entry {
    int bus;
    Complex y;
  };
  std::vector<std::vector<Entry>> rows;

  std::size_t size() const noexcept { return diag.size(); }
  /// Y(i, j); zero when not adjacent.
  Complex at(int i, int j) const;
};

/// Nodal-parallel Ybus formation: each bus accumulates its shunt and then
/// its incident edges in ascending edge id.
AdmittanceGraph build_admittance(const PowerSystemGraph& graph,
                                 const Scheduler& scheduler = Scheduler(1));

struct BranchFlow {
  double pf = 0.0, qf = 0.0, pt = 0.0, qt = 0.0;  // p.u.
};

/// Complex power entering each branch at both terminals.
std::vector<BranchFlow> branch_flows(const PowerSystemGraph& graph,
                                     std::span<const Complex> voltage,
                                     const Scheduler& scheduler = Scheduler(1));

}  // namespace gridflow
