#include "gridflow/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "gridflow/error.hpp"

namespace gridflow {

void PowerSystemGraph::rebuild_adjacency() {
  adjacency.assign(buses.size(), {});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adjacency[edges[e].from].push_back(static_cast<int>(e));
    if (edges[e].to != edges[e].from) {
      adjacency[edges[e].to].push_back(static_cast<int>(e));
    }
  }
}

PatternGraph PowerSystemGraph::pattern() const {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(edges.size());
  for (const auto& e : edges) pairs.emplace_back(e.from, e.to);
  return PatternGraph::from_edges(buses.size(), pairs);
}

BranchAdmittance branch_admittance(const Branch& br) {
  const Complex ys = 1.0 / Complex(br.r, br.x);
  const Complex charging(0.0, br.b / 2.0);
  const Complex t = std::polar(br.tap, br.shift);
  const double t2 = br.tap * br.tap;
  BranchAdmittance y;
  y.tt = ys + charging;
  y.ff = y.tt / t2;
  y.ft = -ys / std::conj(t);
  y.tf = -ys / t;
  return y;
}

Complex AdmittanceGraph::at(int i, int j) const {
  if (i == j) return diag[i];
  const auto& row = rows[i];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const Entry& e, int bus) { return e.bus < bus; });
  return (it != row.end() && it->bus == j) ? it->y : Complex{};
}

AdmittanceGraph build_admittance(const PowerSystemGraph& graph,
                                 const Scheduler& scheduler) {
  const std::size_t n = graph.size();
  AdmittanceGraph y;
  y.edge.resize(graph.edges.size());
  y.diag.resize(n);
  y.rows.resize(n);

  scheduler.run_nodal(graph.edges.size(), [&](std::size_t e) {
    y.edge[e] = branch_admittance(graph.edges[e]);
  });

  scheduler.run_nodal(n, [&](std::size_t bus) {
    const int i = static_cast<int>(bus);
    Complex self(graph.buses[i].gs, graph.buses[i].bs);
    std::vector<AdmittanceGraph::Entry> row;
    for (int e : graph.adjacency[i]) {
      const Branch& br = graph.edges[e];
      const BranchAdmittance& ye = y.edge[e];
      const bool from_side = br.from == i;
      self += from_side ? ye.ff : ye.tt;
      const int j = from_side ? br.to : br.from;
      const Complex mutual = from_side ? ye.ft : ye.tf;
      auto it = std::find_if(row.begin(), row.end(),
                             [j](const auto& entry) { return entry.bus == j; });
      if (it == row.end()) {
        row.push_back({j, mutual});
      } else {
        it->y += mutual;
      }
    }
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.bus < b.bus; });
    y.diag[i] = self;
    y.rows[i] = std::move(row);
  });
  return y;
}

std::vector<BranchFlow> branch_flows(const PowerSystemGraph& graph,
                                     std::span<const Complex> voltage,
                                     const Scheduler& scheduler) {
  if (voltage.size() != graph.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "voltage vector length does not match bus count");
  }
  std::vector<BranchFlow> flows(graph.edges.size());
  scheduler.run_nodal(graph.edges.size(), [&](std::size_t e) {
    const Branch& br = graph.edges[e];
    const BranchAdmittance y = branch_admittance(br);
    const Complex vf = voltage[br.from];
    const Complex vt = voltage[br.to];
    const Complex sf = vf * std::conj(y.ff * vf + y.ft * vt);
    const Complex st = vt * std::conj(y.tf * vf + y.tt * vt);
    flows[e] = {sf.real(), sf.imag(), st.real(), st.imag()};
  });
  return flows;
}

}  // namespace gridflow
