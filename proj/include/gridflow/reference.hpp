#pragma once

// Serial reference kernels. They follow the textbook formulations directly
// (right-looking scatter elimination, row-order substitution, edge-order
// Ybus accumulation) and are kept to cross-check and benchmark the
// level-scheduled kernels.

#include <span>
#include <vector>

#include "gridflow/netgraph.hpp"
#include "gridflow/numeric.hpp"

namespace gridflow::reference {

/// Right-looking LDU: for each pivot i in elimination order, normalize row
/// i of U by a_ii, then scatter a_kj -= a_ki * u_ij over the pivot's
/// higher neighbors, then normalize column i of L.
template <typename Scalar>
FactorGraph<Scalar> factorize(const SparseSystem<Scalar>& system,
                              const FactorOptions& options = {});

/// Forward, diagonal and backward sweeps in plain elimination order.
template <typename Scalar>
std::vector<Scalar> solve(const FactorGraph<Scalar>& factor,
                          std::span<const Scalar> rhs);

/// Ybus by a single pass over edges in id order, scattering into both ends.
AdmittanceGraph build_admittance(const PowerSystemGraph& graph);

}  // namespace gridflow::reference
