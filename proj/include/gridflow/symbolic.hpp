#pragma once

// Symbolic analysis of a structurally symmetric sparse matrix viewed as an
// undirected graph: fill-in under a given elimination order, the elimination
// tree of the filled graph, and the leaf-stripping level partition that
// drives the level-scheduled numeric kernels.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gridflow/scheduler.hpp"

namespace gridflow {

/// Undirected graph without self loops; every neighbor list sorted ascending.
struct PatternGraph {
  std::vector<std::vector<int>> neighbors;

  PatternGraph() = default;
  explicit PatternGraph(std::size_t n) : neighbors(n) {}

  /// Builds a normalized graph; duplicate edges and self loops are dropped.
  static PatternGraph from_edges(std::size_t n,
                                 std::span<const std::pair<int, int>> edges);

  std::size_t size() const noexcept { return neighbors.size(); }
  /// Number of undirected edges.
  std::size_t edge_count() const noexcept;
  bool has_edge(int i, int j) const;
  /// Throws InvalidArgument unless lists are sorted, symmetric and loop-free.
  void validate() const;

  friend bool operator==(const PatternGraph&, const PatternGraph&) = default;
};

/// order[k] = original node eliminated at step k.
using Permutation = std::vector<int>;

enum class Ordering { Natural, MinDegree };

Permutation reorder(const PatternGraph& pattern, Ordering scheme);

/// Relabels nodes so that original node order[k] becomes node k.
PatternGraph permute(const PatternGraph& pattern, const Permutation& order);

/// Exact symbolic elimination fill. Returns the filled graph in the permuted
/// labeling (node k = order[k]). Steps run in elimination order; within a
/// step, the higher-numbered neighbor pairs of the eliminated node are
/// connected concurrently (one task per receiving neighbor).
PatternGraph compute_fill(const PatternGraph& pattern, const Permutation& order,
                          const Scheduler& scheduler = Scheduler(1));

/// parent[i] = smallest neighbor j > i in the filled graph, or -1.
std::vector<int> compute_etree(const PatternGraph& filled,
                               const Scheduler& scheduler = Scheduler(1));

struct LevelPartition {
  std::vector<std::vector<int>> levels;  // each level sorted ascending
  std::vector<int> level_of;             // 1-based
};

/// Repeated leaf stripping of the elimination forest.
LevelPartition compute_levels(std::span<const int> parent);

/// Everything the numeric kernels need, in the permuted labeling.
struct SymbolicAnalysis {
  Permutation order;
  std::vector<int> position;  // inverse of order
  PatternGraph original;      // permuted input pattern
  PatternGraph filled;
  std::vector<std::pair<int, int>> fill_edges;  // (i < j), sorted
  std::vector<int> parent;
  std::vector<std::vector<int>> levels;
  std::vector<int> level_of;

  // Filled pattern plus diagonal as CSR; columns sorted within each row.
  std::vector<std::size_t> row_ptr;
  std::vector<int> col;
  std::vector<std::size_t> diag_pos;
  std::vector<std::size_t> transpose;  // slot of (col[p], row) for slot p

  std::size_t size() const noexcept { return order.size(); }
  std::size_t height() const noexcept { return levels.size(); }
  std::size_t nnz() const noexcept { return col.size(); }
  /// CSR slot of entry (row, column) in permuted labels, or npos.
  std::size_t find(int row, int column) const;
  LevelSchedule schedule(Direction direction) const {
    return LevelSchedule{levels, direction};
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

SymbolicAnalysis analyze(const PatternGraph& pattern, const Permutation& order,
                         const Scheduler& scheduler = Scheduler(1));
SymbolicAnalysis analyze(const PatternGraph& pattern, Ordering scheme,
                         const Scheduler& scheduler = Scheduler(1));

/// Expands a node-level analysis to a scalar analysis where node v carries
/// block_sizes[v] consecutive unknowns (0 drops the node). Scalar unknowns
/// are numbered by original node then by offset within the block, and are
/// eliminated block by block in the node elimination order. The expanded
/// filled graph is fill-closed, so no further fill computation is needed.
SymbolicAnalysis expand(const SymbolicAnalysis& nodes,
                        std::span<const int> block_sizes,
                        const Scheduler& scheduler = Scheduler(1));

}  // namespace gridflow
