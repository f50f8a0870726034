#pragma once

// AC power flow (polar Newton-Raphson and XB fast-decoupled) on the graph
// model. All linear algebra goes through the level-scheduled LDU solver; the
// bus-level symbolic analysis is computed once per topology and expanded to
// the scalar systems of each method.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "gridflow/netgraph.hpp"
#include "gridflow/numeric.hpp"
#include "gridflow/scheduler.hpp"
#include "gridflow/symbolic.hpp"

namespace gridflow {

enum class Method { Newton, FastDecoupled, Auto };

std::string_view to_string(Method method);

struct PowerFlowConfig {
  Method method = Method::Auto;
  double tol = 1e-8;  // max |mismatch|, p.u.
  int newton_max_iter = 20;
  int fd_max_iter = 60;
  bool flat_start = false;
  int threads = 0;  // 0: default_workers()
  std::size_t inline_cutoff = Scheduler::kDefaultInlineCutoff;
  Ordering ordering = Ordering::Natural;
  FactorOptions factor;
  /// Optional per-level timing callback installed on the scheduler.
  std::function<void(const LevelTiming&)> level_hook;
};

struct PhaseTimes {
  double symbolic_ms = 0, assembly_ms = 0, factor_ms = 0, solve_ms = 0;
  double total_ms = 0;
};

struct PowerFlowSolution {
  bool converged = false;
  Method method_used = Method::Newton;
  int iterations = 0;  // fast decoupled: one P half plus one Q half
  int fd_iterations = 0, newton_iterations = 0;
  std::vector<double> vm, va;  // p.u., rad
  double slack_p = 0, slack_q = 0;  // slack generation, p.u.
  std::vector<double> gen_q;        // generator Q per bus (PV and slack), p.u.
  std::vector<BranchFlow> flows;
  double initial_mismatch = 0;
  double max_mismatch = 0;
  std::vector<double> mismatch_trace;  // one entry per iteration
  PhaseTimes times;
};

struct Mismatch {
  std::vector<double> p_calc, q_calc;  // per bus
  std::vector<double> dp, dq;  // scheduled - calculated; zero where not an equation
  double max_abs = 0;          // over dP of PV+PQ and dQ of PQ
};

/// Nodal-parallel injection and mismatch computation.
Mismatch compute_mismatch(const PowerSystemGraph& graph,
                          const AdmittanceGraph& ybus,
                          std::span<const double> vm, std::span<const double> va,
                          const Scheduler& scheduler = Scheduler(1));

/// Topology-bound data shared by every method: Ybus, the bus-level symbolic
/// analysis over the non-slack buses and its expansions.
class PowerFlowModel {
 public:
  PowerFlowModel(const PowerSystemGraph& graph, Ordering ordering,
                 const Scheduler& scheduler);

  const PowerSystemGraph& graph() const noexcept { return *graph_; }
  const AdmittanceGraph& ybus() const noexcept { return ybus_; }

  /// Non-slack buses; reduced index r <-> bus reduced_bus[r].
  std::span<const int> reduced_bus() const noexcept { return reduced_bus_; }
  const SymbolicAnalysis& bus_analysis() const noexcept { return *bus_analysis_; }

  /// Newton unknowns: theta at PV+PQ, |V| at PQ, interleaved per bus.
  const std::shared_ptr<const SymbolicAnalysis>& newton_analysis() const noexcept {
    return newton_analysis_;
  }
  int theta_var(int bus) const { return theta_var_[bus]; }  // -1 for slack
  int vm_var(int bus) const { return vm_var_[bus]; }        // -1 unless PQ
  std::size_t newton_size() const noexcept { return newton_analysis_->size(); }

  /// Fast-decoupled unknowns: B' over PV+PQ, B'' over PQ.
  const std::shared_ptr<const SymbolicAnalysis>& bp_analysis() const noexcept {
    return bus_analysis_;
  }
  const std::shared_ptr<const SymbolicAnalysis>& bpp_analysis() const noexcept {
    return bpp_analysis_;
  }
  int bp_var(int bus) const { return reduced_index_[bus]; }
  int bpp_var(int bus) const { return bpp_var_[bus]; }

  double assembly_ms() const noexcept { return assembly_ms_; }
  double symbolic_ms() const noexcept { return symbolic_ms_; }

 private:
  const PowerSystemGraph* graph_;
  AdmittanceGraph ybus_;
  std::vector<int> reduced_bus_, reduced_index_;
  std::vector<int> theta_var_, vm_var_, bpp_var_;
  std::shared_ptr<const SymbolicAnalysis> bus_analysis_, newton_analysis_,
      bpp_analysis_;
  double assembly_ms_ = 0, symbolic_ms_ = 0;
};

/// Polar Jacobian d(P,Q)_calc / d(theta,|V|) at the given state. Rows are
/// assembled per bus in parallel; each bus writes only its own rows.
SparseSystem<double> build_newton_system(const PowerFlowModel& model,
                                         std::span<const double> vm,
                                         std::span<const double> va,
                                         const Scheduler& scheduler = Scheduler(1));

struct FastDecoupledSystems {
  SparseSystem<double> bp;
  SparseSystem<double> bpp;
};

/// XB scheme: B' from series reactance only, B'' = -Im(Ybus) on PQ buses.
FastDecoupledSystems build_fd_systems(const PowerFlowModel& model,
                                      const Scheduler& scheduler = Scheduler(1));

PowerFlowSolution solve_newton(const PowerSystemGraph& graph,
                               const PowerFlowConfig& config);
PowerFlowSolution solve_fast_decoupled(const PowerSystemGraph& graph,
                                       const PowerFlowConfig& config);
/// Fast decoupled first; Newton from its last iterate if it fails.
PowerFlowSolution solve_auto(const PowerSystemGraph& graph,
                             const PowerFlowConfig& config);
/// Dispatches on config.method.
PowerFlowSolution solve_power_flow(const PowerSystemGraph& graph,
                                   const PowerFlowConfig& config);

}  // namespace gridflow
