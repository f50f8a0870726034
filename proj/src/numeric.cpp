#include "gridflow/numeric.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>
#include <string>

#include "gridflow/error.hpp"

namespace gridflow {
namespace {

bool same_pattern(const SymbolicAnalysis& a, const SymbolicAnalysis& b) {
  return &a == &b ||
         (a.order == b.order && a.row_ptr == b.row_ptr && a.col == b.col);
}

template <typename Scalar>
void factor_in_place(std::span<Scalar> val, const SymbolicAnalysis& a,
                     const Scheduler& scheduler, const FactorOptions& options) {
  const std::size_t n = a.size();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, std::abs(val[a.diag_pos[i]]));
  }
  const double threshold =
      options.pivot_tolerance * (max_diag > 0.0 ? max_diag : 1.0);

  const auto& row_ptr = a.row_ptr;
  const auto& col = a.col;
  const auto& diag = a.diag_pos;
  const auto& tr = a.transpose;

  auto factor_node = [&](int j) {
    const std::size_t jd = diag[j];
    const std::size_t jend = row_ptr[j + 1];
    // Descendants k < j of node j are exactly the lower slots of row j.
    for (std::size_t p = row_ptr[j]; p < jd; ++p) {
      const int k = col[p];
      const Scalar dk = val[diag[k]];
      const Scalar l_jk = val[p];
      const Scalar u_kj = val[tr[p]];
      const Scalar c = dk * u_kj;
      const Scalar r = dk * l_jk;
      val[jd] -= l_jk * c;

      // Row k beyond column j is a subset of row j beyond the diagonal.
      std::size_t s = jd + 1;
      const std::size_t kend = row_ptr[k + 1];
      std::size_t q = tr[p] + 1;  // slot (k, j) + 1
      for (; q < kend; ++q) {
        const int i = col[q];
        while (col[s] != i) ++s;
        assert(s < jend);
        val[tr[s]] -= val[tr[q]] * c;  // a_ij -= l_ik d_k u_kj
        val[s] -= val[q] * r;          // a_ji -= l_jk d_k u_ki
      }
    }
    const Scalar d = val[jd];
    if (!(std::abs(d) >= threshold)) {
      std::ostringstream msg;
      msg << "singular pivot at node " << a.order[j] << " (|d| = "
          << std::abs(d) << ", threshold " << threshold << ")";
      throw Error(ErrorCode::SingularPivot, msg.str(), std::nullopt,
                  static_cast<std::size_t>(a.order[j]));
    }
    for (std::size_t s = jd + 1; s < jend; ++s) {
      val[s] /= d;
      val[tr[s]] /= d;
    }
  };

  scheduler.run_levels(a.schedule(Direction::Forward),
                       [&](int j) { factor_node(j); });
}

}  // namespace

template <typename Scalar>
SparseSystem<Scalar>::SparseSystem(
    std::shared_ptr<const SymbolicAnalysis> analysis)
    : analysis_(std::move(analysis)), values_(analysis_->nnz()) {}

template <typename Scalar>
void SparseSystem<Scalar>::set_zero() {
  std::fill(values_.begin(), values_.end(), Scalar{});
}

template <typename Scalar>
std::size_t SparseSystem<Scalar>::slot(int row, int column) const {
  const auto& a = *analysis_;
  const int n = static_cast<int>(a.size());
  if (row < 0 || row >= n || column < 0 || column >= n) {
    throw Error(ErrorCode::DimensionMismatch, "entry index out of range");
  }
  const std::size_t p = a.find(a.position[row], a.position[column]);
  if (p == SymbolicAnalysis::npos) {
    throw Error(ErrorCode::PatternMismatch,
                "entry (" + std::to_string(row) + "," + std::to_string(column) +
                    ") is outside the analysed pattern");
  }
  return p;
}

template <typename Scalar>
void SparseSystem<Scalar>::add(int row, int column, Scalar value) {
  values_[slot(row, column)] += value;
}

template <typename Scalar>
Scalar SparseSystem<Scalar>::get(int row, int column) const {
  return values_[slot(row, column)];
}

template <typename Scalar>
Scalar FactorGraph<Scalar>::at(int row, int column) const {
  const std::size_t p = analysis_->find(row, column);
  return p == SymbolicAnalysis::npos ? Scalar{} : values_[p];
}

template <typename Scalar>
FactorGraph<Scalar> factorize(const SparseSystem<Scalar>& system,
                              const Scheduler& scheduler,
                              const FactorOptions& options) {
  FactorGraph<Scalar> factor(system.analysis_ptr());
  refactorize_values(factor, system, scheduler, options);
  return factor;
}

template <typename Scalar>
void refactorize_values(FactorGraph<Scalar>& factor,
                        const SparseSystem<Scalar>& system,
                        const Scheduler& scheduler,
                        const FactorOptions& options) {
  if (!same_pattern(factor.analysis(), system.analysis())) {
    throw Error(ErrorCode::PatternMismatch,
                "system pattern differs from the factor's analysis");
  }
  std::copy(system.values().begin(), system.values().end(),
            factor.values().begin());
  factor_in_place(factor.values(), factor.analysis(), scheduler, options);
}

template <typename Scalar>
std::vector<Scalar> solve(const FactorGraph<Scalar>& factor,
                          std::span<const Scalar> rhs,
                          const Scheduler& scheduler) {
  const SymbolicAnalysis& a = factor.analysis();
  const std::size_t n = a.size();
  if (rhs.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "right-hand side has " + std::to_string(rhs.size()) +
                    " entries, system has " + std::to_string(n));
  }
  const auto val = factor.values();
  std::vector<Scalar> work(n);
  for (std::size_t k = 0; k < n; ++k) work[k] = rhs[a.order[k]];

  // z_i = b_i - sum_{j<i} l_ij z_j ; every j is a descendant of i.
  scheduler.run_levels(a.schedule(Direction::Forward), [&](int i) {
    Scalar s = work[i];
    for (std::size_t p = a.row_ptr[i]; p < a.diag_pos[i]; ++p) {
      s -= val[p] * work[a.col[p]];
    }
    work[i] = s;
  });

  scheduler.run_nodal(n, [&](std::size_t i) { work[i] /= val[a.diag_pos[i]]; });

  // x_i = y_i - sum_{j>i} u_ij x_j ; every j is an ancestor of i.
  scheduler.run_levels(a.schedule(Direction::Backward), [&](int i) {
    Scalar s = work[i];
    for (std::size_t p = a.diag_pos[i] + 1; p < a.row_ptr[i + 1]; ++p) {
      s -= val[p] * work[a.col[p]];
    }
    work[i] = s;
  });

  std::vector<Scalar> x(n);
  for (std::size_t k = 0; k < n; ++k) x[a.order[k]] = work[k];
  return x;
}

#define GRIDFLOW_INSTANTIATE(T)                                              \
  template class SparseSystem<T>;                                            \
  template class FactorGraph<T>;                                             \
  template FactorGraph<T> factorize(const SparseSystem<T>&, const Scheduler&, \
                                    const FactorOptions&);                   \
  template void refactorize_values(FactorGraph<T>&, const SparseSystem<T>&,  \
                                   const Scheduler&, const FactorOptions&);  \
  template std::vector<T> solve(const FactorGraph<T>&, std::span<const T>,   \
                                const Scheduler&);

GRIDFLOW_INSTANTIATE(double)
GRIDFLOW_INSTANTIATE(std::complex<double>)

#undef GRIDFLOW_INSTANTIATE

}  // namespace gridflow
