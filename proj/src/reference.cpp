#include "gridflow/reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridflow/error.hpp"

namespace gridflow::reference {

template <typename Scalar>
FactorGraph<Scalar> factorize(const SparseSystem<Scalar>& system,
                              const FactorOptions& options) {
  FactorGraph<Scalar> factor(system.analysis_ptr());
  const SymbolicAnalysis& a = factor.analysis();
  auto val = factor.values();
  std::copy(system.values().begin(), system.values().end(), val.begin());

  double max_diag = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_diag = std::max(max_diag, std::abs(val[a.diag_pos[i]]));
  }
  const double threshold =
      options.pivot_tolerance * (max_diag > 0.0 ? max_diag : 1.0);

  for (std::size_t i = 0; i < a.size(); ++i) {
    const Scalar d = val[a.diag_pos[i]];
    if (!(std::abs(d) >= threshold)) {
      throw Error(ErrorCode::SingularPivot,
                  "singular pivot at node " + std::to_string(a.order[i]),
                  std::nullopt, static_cast<std::size_t>(a.order[i]));
    }
    const std::size_t first = a.diag_pos[i] + 1;
    const std::size_t last = a.row_ptr[i + 1];
    for (std::size_t s = first; s < last; ++s) val[s] /= d;  // u_ij
    for (std::size_t sk = first; sk < last; ++sk) {
      const int k = a.col[sk];
      const Scalar a_ki = val[a.transpose[sk]];
      for (std::size_t sj = first; sj < last; ++sj) {
        const int j = a.col[sj];
        val[a.find(k, j)] -= a_ki * val[sj];
      }
    }
    for (std::size_t s = first; s < last; ++s) val[a.transpose[s]] /= d;  // l_ki
  }
  return factor;
}

template <typename Scalar>
std::vector<Scalar> solve(const FactorGraph<Scalar>& factor,
                          std::span<const Scalar> rhs) {
  const SymbolicAnalysis& a = factor.analysis();
  const std::size_t n = a.size();
  if (rhs.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side length mismatch");
  }
  const auto val = factor.values();
  std::vector<Scalar> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = rhs[a.order[k]];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = a.row_ptr[i]; p < a.diag_pos[i]; ++p) {
      w[i] -= val[p] * w[a.col[p]];
    }
  }
  for (std::size_t i = 0; i < n; ++i) w[i] /= val[a.diag_pos[i]];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t p = a.diag_pos[i] + 1; p < a.row_ptr[i + 1]; ++p) {
      w[i] -= val[p] * w[a.col[p]];
    }
  }
  std::vector<Scalar> x(n);
  for (std::size_t k = 0; k < n; ++k) x[a.order[k]] = w[k];
  return x;
}

AdmittanceGraph build_admittance(const PowerSystemGraph& graph) {
  const std::size_t n = graph.size();
  AdmittanceGraph y;
  y.diag.resize(n);
  y.rows.resize(n);
  y.edge.resize(graph.edges.size());
  for (std::size_t i = 0; i < n; ++i) {
    y.diag[i] = Complex(graph.buses[i].gs, graph.buses[i].bs);
  }
  auto add_mutual = [&](int i, int j, Complex v) {
    auto& row = y.rows[i];
    auto it = std::find_if(row.begin(), row.end(),
                           [j](const auto& e) { return e.bus == j; });
    if (it == row.end()) {
      row.push_back({j, v});
    } else {
      it->y += v;
    }
  };
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Branch& br = graph.edges[e];
    const BranchAdmittance ye = branch_admittance(br);
    y.edge[e] = ye;
    y.diag[br.from] += ye.ff;
    y.diag[br.to] += ye.tt;
    add_mutual(br.from, br.to, ye.ft);
    add_mutual(br.to, br.from, ye.tf);
  }
  for (auto& row : y.rows) {
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.bus < b.bus; });
  }
  return y;
}

template FactorGraph<double> factorize(const SparseSystem<double>&,
                                       const FactorOptions&);
template FactorGraph<std::complex<double>> factorize(
    const SparseSystem<std::complex<double>>&, const FactorOptions&);
template std::vector<double> solve(const FactorGraph<double>&,
                                   std::span<const double>);
template std::vector<std::complex<double>> solve(
    const FactorGraph<std::complex<double>>&,
    std::span<const std::complex<double>>);

}  // namespace gridflow::reference
