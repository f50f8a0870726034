#pragma once

// Level-scheduled LDU factorization and triangular solves over a filled,
// structurally symmetric pattern. Values may be nonsymmetric.
//
// Storage is the CSR layout of SymbolicAnalysis (permuted labels). After
// factorization, slot (i, j) holds
//   d_ii            for i == j,
//   l_ij            for i >  j  (unit lower factor),
//   u_ij            for i <  j  (unit upper factor),
// so that A = L * D * U.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "gridflow/scheduler.hpp"
#include "gridflow/symbolic.hpp"

namespace gridflow {

struct FactorOptions {
  /// Pivot threshold relative to the largest initial diagonal magnitude.
  double pivot_tolerance = 1e-12;
};

template <typename Scalar>
class SparseSystem {
 public:
  explicit SparseSystem(std::shared_ptr<const SymbolicAnalysis> analysis);

  const SymbolicAnalysis& analysis() const noexcept { return *analysis_; }
  const std::shared_ptr<const SymbolicAnalysis>& analysis_ptr() const noexcept {
    return analysis_;
  }
  std::size_t size() const noexcept { return analysis_->size(); }

  void set_zero();
  /// Adds to entry (row, column) given in original labels. Throws
  /// PatternMismatch if the entry is outside the filled pattern.
  void add(int row, int column, Scalar value);
  Scalar get(int row, int column) const;
  /// CSR slot of (row, column) in original labels.
  std::size_t slot(int row, int column) const;

  std::span<Scalar> values() noexcept { return values_; }
  std::span<const Scalar> values() const noexcept { return values_; }

 private:
  std::shared_ptr<const SymbolicAnalysis> analysis_;
  std::vector<Scalar> values_;
};

template <typename Scalar>
class FactorGraph {
 public:
  explicit FactorGraph(std::shared_ptr<const SymbolicAnalysis> analysis)
      : analysis_(std::move(analysis)), values_(analysis_->nnz()) {}

  const SymbolicAnalysis& analysis() const noexcept { return *analysis_; }
  const std::shared_ptr<const SymbolicAnalysis>& analysis_ptr() const noexcept {
    return analysis_;
  }
  std::size_t size() const noexcept { return analysis_->size(); }

  /// Factor value at (row, column) in permuted labels; zero outside pattern.
  Scalar at(int row, int column) const;

  std::span<Scalar> values() noexcept { return values_; }
  std::span<const Scalar> values() const noexcept { return values_; }

 private:
  std::shared_ptr<const SymbolicAnalysis> analysis_;
  std::vector<Scalar> values_;
};

/// Fan-in factorization: each node gathers the updates of its already
/// factored descendants (ascending index), then normalizes its row of U and
/// column of L by its pivot. Nodes of one level run concurrently.
/// Throws SingularPivot (index = original node) on a small pivot.
template <typename Scalar>
FactorGraph<Scalar> factorize(const SparseSystem<Scalar>& system,
                              const Scheduler& scheduler,
                              const FactorOptions& options = {});

/// Numeric refactorization on the existing pattern. Throws PatternMismatch
/// when `system` was built on a different analysis.
template <typename Scalar>
void refactorize_values(FactorGraph<Scalar>& factor,
                        const SparseSystem<Scalar>& system,
                        const Scheduler& scheduler,
                        const FactorOptions& options = {});

/// Solves A x = b (original labels): forward substitution by level,
/// diagonal scaling, backward substitution by reversed level.
template <typename Scalar>
std::vector<Scalar> solve(const FactorGraph<Scalar>& factor,
                          std::span<const Scalar> rhs,
                          const Scheduler& scheduler);

extern template class SparseSystem<double>;
extern template class SparseSystem<std::complex<double>>;
extern template class FactorGraph<double>;
extern template class FactorGraph<std::complex<double>>;

}  // namespace gridflow
