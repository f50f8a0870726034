#include "gridflow/symbolic.hpp"

#include <algorithm>
#include <iterator>
#include <set>
#include <string>

#include "gridflow/error.hpp"

namespace gridflow {
namespace {

void check_permutation(const Permutation& order, std::size_t n) {
  if (order.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "ordering has " + std::to_string(order.size()) +
                    " entries, pattern has " + std::to_string(n) + " nodes");
  }
  std::vector<char> seen(n, 0);
  for (int v : order) {
    if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v]) {
      throw Error(ErrorCode::InvalidArgument, "ordering is not a permutation");
    }
    seen[v] = 1;
  }
}

// Merges the sorted range [first, last) into the sorted vector `into`.
void merge_into(std::vector<int>& into, std::vector<int>::const_iterator first,
                std::vector<int>::const_iterator last) {
  if (first == last) return;
  std::vector<int> merged;
  merged.reserve(into.size() + static_cast<std::size_t>(last - first));
  std::set_union(into.begin(), into.end(), first, last,
                 std::back_inserter(merged));
  into.swap(merged);
}

PatternGraph from_upper(const std::vector<std::vector<int>>& upper) {
  const std::size_t n = upper.size();
  std::vector<std::vector<int>> lower(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : upper[i]) lower[j].push_back(static_cast<int>(i));
  }
  PatternGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& nb = g.neighbors[i];
    nb.reserve(lower[i].size() + upper[i].size());
    nb.insert(nb.end(), lower[i].begin(), lower[i].end());  // already ascending
    nb.insert(nb.end(), upper[i].begin(), upper[i].end());
  }
  return g;
}

void build_csr(SymbolicAnalysis& a) {
  const std::size_t n = a.filled.size();
  a.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    a.row_ptr[i + 1] = a.row_ptr[i] + a.filled.neighbors[i].size() + 1;
  }
  a.col.resize(a.row_ptr[n]);
  a.diag_pos.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t p = a.row_ptr[i];
    bool placed = false;
    for (int j : a.filled.neighbors[i]) {
      if (!placed && j > static_cast<int>(i)) {
        a.diag_pos[i] = p;
        a.col[p++] = static_cast<int>(i);
        placed = true;
      }
      a.col[p++] = j;
    }
    if (!placed) {
      a.diag_pos[i] = p;
      a.col[p] = static_cast<int>(i);
    }
  }
  a.transpose.resize(a.col.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      a.transpose[p] = a.find(a.col[p], static_cast<int>(i));
    }
  }
}

void finish_analysis(SymbolicAnalysis& a, const Scheduler& scheduler) {
  a.fill_edges.clear();
  for (std::size_t i = 0; i < a.filled.size(); ++i) {
    const auto& f = a.filled.neighbors[i];
    const auto& o = a.original.neighbors[i];
    auto lo = std::upper_bound(f.begin(), f.end(), static_cast<int>(i));
    auto olo = std::upper_bound(o.begin(), o.end(), static_cast<int>(i));
    std::vector<int> extra;
    std::set_difference(lo, f.end(), olo, o.end(), std::back_inserter(extra));
    for (int j : extra) a.fill_edges.emplace_back(static_cast<int>(i), j);
  }
  a.parent = compute_etree(a.filled, scheduler);
  LevelPartition part = compute_levels(a.parent);
  a.levels = std::move(part.levels);
  a.level_of = std::move(part.level_of);
  build_csr(a);
}

}  // namespace

PatternGraph PatternGraph::from_edges(
    std::size_t n, std::span<const std::pair<int, int>> edges) {
  PatternGraph g(n);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n ||
        static_cast<std::size_t>(j) >= n) {
      throw Error(ErrorCode::InvalidArgument,
                  "edge (" + std::to_string(i) + "," + std::to_string(j) +
                      ") out of range");
    }
    if (i == j) continue;
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

std::size_t PatternGraph::edge_count() const noexcept {
  std::size_t total = 0;
  for (const auto& nb : neighbors) total += nb.size();
  return total / 2;
}

bool PatternGraph::has_edge(int i, int j) const {
  const auto& nb = neighbors[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

void PatternGraph::validate() const {
  const int n = static_cast<int>(size());
  for (int i = 0; i < n; ++i) {
    const auto& nb = neighbors[i];
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const int j = nb[k];
      if (j < 0 || j >= n || j == i || (k > 0 && nb[k - 1] >= j) ||
          !has_edge(j, i)) {
        throw Error(ErrorCode::InvalidArgument,
                    "malformed pattern at node " + std::to_string(i));
      }
    }
  }
}

Permutation reorder(const PatternGraph& pattern, Ordering scheme) {
  const std::size_t n = pattern.size();
  Permutation order(n);
  if (scheme == Ordering::Natural) {
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    return order;
  }

  // Minimum degree on the explicit elimination graph; std::set ordering on
  // (degree, index) gives smallest-index tie breaking.
  std::vector<std::vector<int>> adj = pattern.neighbors;
  std::set<std::pair<std::size_t, int>> queue;
  for (std::size_t i = 0; i < n; ++i) queue.emplace(adj[i].size(), static_cast<int>(i));

  for (std::size_t k = 0; k < n; ++k) {
    const int v = queue.begin()->second;
    queue.erase(queue.begin());
    order[k] = v;
    const std::vector<int> nbrs = std::move(adj[v]);
    adj[v].clear();
    for (int u : nbrs) {
      queue.erase({adj[u].size(), u});
      auto& au = adj[u];
      au.erase(std::lower_bound(au.begin(), au.end(), v));
      std::vector<int> others;
      others.reserve(nbrs.size());
      for (int w : nbrs) {
        if (w != u) others.push_back(w);
      }
      merge_into(au, others.cbegin(), others.cend());
      queue.emplace(au.size(), u);
    }
  }
  return order;
}

PatternGraph permute(const PatternGraph& pattern, const Permutation& order) {
  const std::size_t n = pattern.size();
  check_permutation(order, n);
  std::vector<int> position(n);
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = static_cast<int>(k);
  PatternGraph out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& nb = out.neighbors[k];
    for (int j : pattern.neighbors[order[k]]) nb.push_back(position[j]);
    std::sort(nb.begin(), nb.end());
  }
  return out;
}

PatternGraph compute_fill(const PatternGraph& pattern, const Permutation& order,
                          const Scheduler& scheduler) {
  const PatternGraph permuted = permute(pattern, order);
  const std::size_t n = permuted.size();

  std::vector<std::vector<int>> upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = permuted.neighbors[i];
    upper[i].assign(std::upper_bound(nb.begin(), nb.end(), static_cast<int>(i)),
                    nb.end());
  }

  for (std::size_t i = 0; i < n; ++i) {
    // upper[i] is never written during step i: only nodes above i receive.
    const std::vector<int>& higher = upper[i];
    scheduler.run_nodal(higher.size(), [&](std::size_t a) {
      merge_into(upper[higher[a]], higher.cbegin() + static_cast<long>(a) + 1,
                 higher.cend());
    });
  }
  return from_upper(upper);
}

std::vector<int> compute_etree(const PatternGraph& filled,
                               const Scheduler& scheduler) {
  std::vector<int> parent(filled.size(), -1);
  scheduler.run_nodal(filled.size(), [&](std::size_t i) {
    const auto& nb = filled.neighbors[i];
    auto it = std::upper_bound(nb.begin(), nb.end(), static_cast<int>(i));
    if (it != nb.end()) parent[i] = *it;
  });
  return parent;
}

LevelPartition compute_levels(std::span<const int> parent) {
  const std::size_t n = parent.size();
  std::vector<int> pending_children(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = parent[i];
    if (p == -1) continue;
    if (p <= static_cast<int>(i) || static_cast<std::size_t>(p) >= n) {
      throw Error(ErrorCode::InvalidArgument,
                  "parent of node " + std::to_string(i) +
                      " must be a higher index",
                  std::nullopt, i);
    }
    ++pending_children[p];
  }

  LevelPartition out;
  out.level_of.assign(n, 0);
  std::vector<int> leaves;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending_children[i] == 0) leaves.push_back(static_cast<int>(i));
  }
  int level = 1;
  while (!leaves.empty()) {
    std::vector<int> next;
    for (int i : leaves) {
      out.level_of[i] = level;
      const int p = parent[i];
      if (p != -1 && --pending_children[p] == 0) next.push_back(p);
    }
    std::sort(next.begin(), next.end());
    out.levels.push_back(std::move(leaves));
    leaves = std::move(next);
    ++level;
  }
  return out;
}

std::size_t SymbolicAnalysis::find(int row, int column) const {
  auto first = col.begin() + static_cast<long>(row_ptr[row]);
  auto last = col.begin() + static_cast<long>(row_ptr[row + 1]);
  auto it = std::lower_bound(first, last, column);
  if (it == last || *it != column) return npos;
  return static_cast<std::size_t>(it - col.begin());
}

SymbolicAnalysis analyze(const PatternGraph& pattern, const Permutation& order,
                         const Scheduler& scheduler) {
  pattern.validate();
  SymbolicAnalysis a;
  a.order = order;
  a.original = permute(pattern, order);
  a.position.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    a.position[order[k]] = static_cast<int>(k);
  }
  a.filled = compute_fill(pattern, order, scheduler);
  finish_analysis(a, scheduler);
  return a;
}

SymbolicAnalysis analyze(const PatternGraph& pattern, Ordering scheme,
                         const Scheduler& scheduler) {
  return analyze(pattern, reorder(pattern, scheme), scheduler);
}

SymbolicAnalysis expand(const SymbolicAnalysis& nodes,
                        std::span<const int> block_sizes,
                        const Scheduler& scheduler) {
  const std::size_t n = nodes.size();
  if (block_sizes.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "block size list does not match node count");
  }
  // Scalar labels: by original node, then by offset in block.
  std::vector<int> label_offset(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (block_sizes[v] < 0) {
      throw Error(ErrorCode::InvalidArgument, "negative block size");
    }
    label_offset[v + 1] = label_offset[v] + block_sizes[v];
  }
  // Scalar elimination positions: by node position, then offset in block.
  std::vector<int> pos_offset(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    pos_offset[k + 1] = pos_offset[k] + block_sizes[nodes.order[k]];
  }
  const std::size_t m = static_cast<std::size_t>(pos_offset[n]);

  SymbolicAnalysis a;
  a.order.resize(m);
  a.position.resize(m);
  for (std::size_t k = 0; k < n; ++k) {
    const int v = nodes.order[k];
    for (int t = 0; t < block_sizes[v]; ++t) {
      a.order[pos_offset[k] + t] = label_offset[v] + t;
      a.position[label_offset[v] + t] = pos_offset[k] + t;
    }
  }

  auto expand_graph = [&](const PatternGraph& g) {
    PatternGraph out(m);
    for (std::size_t k = 0; k < n; ++k) {
      const int size = block_sizes[nodes.order[k]];
      if (size == 0) continue;
      std::vector<int> cols;
      for (int t = 0; t < size; ++t) cols.push_back(pos_offset[k] + t);
      for (int j : g.neighbors[k]) {
        for (int t = 0; t < block_sizes[nodes.order[j]]; ++t) {
          cols.push_back(pos_offset[j] + t);
        }
      }
      std::sort(cols.begin(), cols.end());
      for (int t = 0; t < size; ++t) {
        const int self = pos_offset[k] + t;
        auto& nb = out.neighbors[self];
        nb.reserve(cols.size() - 1);
        for (int c : cols) {
          if (c != self) nb.push_back(c);
        }
      }
    }
    return out;
  };
  a.original = expand_graph(nodes.original);
  a.filled = expand_graph(nodes.filled);
  finish_analysis(a, scheduler);
  return a;
}

}  // namespace gridflow
