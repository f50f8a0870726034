#include "gridflow/powerflow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <utility>

#include "gridflow/error.hpp"

namespace gridflow {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct State {
  std::vector<double> vm, va;
};

State initial_state(const PowerSystemGraph& g, bool flat_start) {
  State s;
  s.vm.resize(g.size());
  s.va.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Bus& bus = g.buses[i];
    const bool regulated = bus.type != BusType::PQ;
    if (flat_start) {
      s.vm[i] = regulated ? g.gens[i].vset : 1.0;
      s.va[i] = bus.type == BusType::Slack ? bus.va0 : 0.0;
    } else {
      s.vm[i] = regulated ? g.gens[i].vset : bus.vm0;
      s.va[i] = bus.va0;
    }
  }
  return s;
}

class Runner {
 public:
  Runner(const PowerSystemGraph& graph, const PowerFlowConfig& config)
      : graph_(graph),
        config_(config),
        scheduler_(config.threads > 0 ? config.threads : default_workers(),
                   config.inline_cutoff),
        model_(graph, config.ordering, scheduler_) {
    if (config.level_hook) scheduler_.set_level_hook(config.level_hook);
    if (!(config.tol > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    }
    if (config.newton_max_iter < 0 || config.fd_max_iter < 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "iteration limits must be non-negative");
    }
  }

  PowerFlowSolution newton(State state, int max_iter) {
    PowerFlowSolution sol = start_solution(Method::Newton);
    Mismatch mis = mismatch(state, sol);
    sol.initial_mismatch = mis.max_abs;
    sol.converged = mis.max_abs < config_.tol;

    std::optional<FactorGraph<double>> factor;
    std::vector<double> rhs(model_.newton_size());
    for (int it = 1; it <= max_iter && !sol.converged; ++it) {
      auto t0 = Clock::now();
      const SparseSystem<double> jac =
          build_newton_system(model_, state.vm, state.va, scheduler_);
      sol.times.assembly_ms += ms_since(t0);

      t0 = Clock::now();
      if (factor) {
        refactorize_values(*factor, jac, scheduler_, config_.factor);
      } else {
        factor.emplace(factorize(jac, scheduler_, config_.factor));
      }
      sol.times.factor_ms += ms_since(t0);

      for (std::size_t i = 0; i < graph_.size(); ++i) {
        const int bus = static_cast<int>(i);
        if (model_.theta_var(bus) >= 0) rhs[model_.theta_var(bus)] = mis.dp[i];
        if (model_.vm_var(bus) >= 0) rhs[model_.vm_var(bus)] = mis.dq[i];
      }
      t0 = Clock::now();
      const std::vector<double> dx = solve<double>(*factor, rhs, scheduler_);
      sol.times.solve_ms += ms_since(t0);

      for (std::size_t i = 0; i < graph_.size(); ++i) {
        const int bus = static_cast<int>(i);
        if (model_.theta_var(bus) >= 0) state.va[i] += dx[model_.theta_var(bus)];
        if (model_.vm_var(bus) >= 0) state.vm[i] += dx[model_.vm_var(bus)];
      }
      mis = mismatch(state, sol);
      sol.mismatch_trace.push_back(mis.max_abs);
      sol.iterations = it;
      sol.converged = mis.max_abs < config_.tol;
    }
    sol.newton_iterations = sol.iterations;
    finish(sol, state, mis);
    return sol;
  }

  PowerFlowSolution fast_decoupled(State state, int max_iter) {
    PowerFlowSolution sol = start_solution(Method::FastDecoupled);
    Mismatch mis = mismatch(state, sol);
    sol.initial_mismatch = mis.max_abs;
    sol.converged = mis.max_abs < config_.tol;

    if (!sol.converged && max_iter > 0) {
      auto t0 = Clock::now();
      const FastDecoupledSystems systems = build_fd_systems(model_, scheduler_);
      sol.times.assembly_ms += ms_since(t0);
      t0 = Clock::now();
      const FactorGraph<double> bp = factorize(systems.bp, scheduler_, config_.factor);
      const FactorGraph<double> bpp =
          factorize(systems.bpp, scheduler_, config_.factor);
      sol.times.factor_ms += ms_since(t0);

      std::vector<double> rhs_p(bp.size()), rhs_q(bpp.size());
      for (int it = 1; it <= max_iter && !sol.converged; ++it) {
        sol.iterations = it;
        // P - theta half
        for (std::size_t i = 0; i < graph_.size(); ++i) {
          const int r = model_.bp_var(static_cast<int>(i));
          if (r >= 0) rhs_p[r] = mis.dp[i] / state.vm[i];
        }
        t0 = Clock::now();
        const std::vector<double> dtheta = solve<double>(bp, rhs_p, scheduler_);
        sol.times.solve_ms += ms_since(t0);
        for (std::size_t i = 0; i < graph_.size(); ++i) {
          const int r = model_.bp_var(static_cast<int>(i));
          if (r >= 0) state.va[i] += dtheta[r];
        }
        mis = mismatch(state, sol);
        if (mis.max_abs < config_.tol) {
          sol.converged = true;
          sol.mismatch_trace.push_back(mis.max_abs);
          break;
        }
        // Q - V half
        if (bpp.size() > 0) {
          for (std::size_t i = 0; i < graph_.size(); ++i) {
            const int r = model_.bpp_var(static_cast<int>(i));
            if (r >= 0) rhs_q[r] = mis.dq[i] / state.vm[i];
          }
          t0 = Clock::now();
          const std::vector<double> dv = solve<double>(bpp, rhs_q, scheduler_);
          sol.times.solve_ms += ms_since(t0);
          for (std::size_t i = 0; i < graph_.size(); ++i) {
            const int r = model_.bpp_var(static_cast<int>(i));
            if (r >= 0) state.vm[i] += dv[r];
          }
          mis = mismatch(state, sol);
        }
        sol.mismatch_trace.push_back(mis.max_abs);
        sol.converged = mis.max_abs < config_.tol;
      }
    }
    sol.fd_iterations = sol.iterations;
    finish(sol, state, mis);
    return sol;
  }

  State start() const { return initial_state(graph_, config_.flat_start); }
  double model_assembly_ms() const { return model_.assembly_ms(); }

 private:
  PowerFlowSolution start_solution(Method method) const {
    PowerFlowSolution sol;
    sol.method_used = method;
    sol.times.symbolic_ms = model_.symbolic_ms();
    sol.times.assembly_ms = model_.assembly_ms();
    return sol;
  }

  Mismatch mismatch(const State& s, PowerFlowSolution& sol) const {
    const auto t0 = Clock::now();
    Mismatch m = compute_mismatch(graph_, model_.ybus(), s.vm, s.va, scheduler_);
    sol.times.assembly_ms += ms_since(t0);
    return m;
  }

  void finish(PowerFlowSolution& sol, const State& s, const Mismatch& mis) const {
    sol.vm = s.vm;
    sol.va = s.va;
    sol.max_mismatch = mis.max_abs;
    const std::size_t n = graph_.size();
    sol.gen_q.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (graph_.buses[i].type != BusType::PQ) {
        sol.gen_q[i] = mis.q_calc[i] + graph_.buses[i].qd;
      }
    }
    const int slack = graph_.slack;
    sol.slack_p = mis.p_calc[slack] + graph_.buses[slack].pd;
    sol.slack_q = sol.gen_q[slack];
    std::vector<Complex> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(s.vm[i], s.va[i]);
    sol.flows = branch_flows(graph_, v, scheduler_);
  }

  const PowerSystemGraph& graph_;
  const PowerFlowConfig& config_;
  Scheduler scheduler_;
  PowerFlowModel model_;
};

void check_state(const PowerSystemGraph& g, std::span<const double> vm,
                 std::span<const double> va) {
  if (vm.size() != g.size() || va.size() != g.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "voltage arrays do not match bus count");
  }
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Newton: return "newton";
    case Method::FastDecoupled: return "fast_decoupled";
    case Method::Auto: return "auto";
  }
  return "unknown";
}

Mismatch compute_mismatch(const PowerSystemGraph& g, const AdmittanceGraph& y,
                          std::span<const double> vm, std::span<const double> va,
                          const Scheduler& scheduler) {
  check_state(g, vm, va);
  const std::size_t n = g.size();
  Mismatch m;
  m.p_calc.resize(n);
  m.q_calc.resize(n);
  m.dp.assign(n, 0.0);
  m.dq.assign(n, 0.0);
  std::vector<double> local_max(n, 0.0);

  scheduler.run_nodal(n, [&](std::size_t bus) {
    const int i = static_cast<int>(bus);
    double p = 0.0, q = 0.0;
    auto term = [&](int j, Complex yij) {
      const double th = va[i] - va[j];
      const double c = std::cos(th), s = std::sin(th);
      p += vm[j] * (yij.real() * c + yij.imag() * s);
      q += vm[j] * (yij.real() * s - yij.imag() * c);
    };
    // ascending neighbor index with the diagonal in place
    bool self_done = false;
    for (const auto& e : y.rows[i]) {
      if (!self_done && e.bus > i) {
        term(i, y.diag[i]);
        self_done = true;
      }
      term(e.bus, e.y);
    }
    if (!self_done) term(i, y.diag[i]);
    p *= vm[i];
    q *= vm[i];
    m.p_calc[i] = p;
    m.q_calc[i] = q;

    const Bus& b = g.buses[i];
    const Generation& gen = g.gens[i];
    double worst = 0.0;
    if (b.type != BusType::Slack) {
      m.dp[i] = (gen.pg - b.pd) - p;
      worst = std::abs(m.dp[i]);
    }
    if (b.type == BusType::PQ) {
      m.dq[i] = (gen.qg - b.qd) - q;
      worst = std::max(worst, std::abs(m.dq[i]));
    }
    local_max[i] = worst;
  });
  for (double v : local_max) m.max_abs = std::max(m.max_abs, v);
  return m;
}

PowerFlowModel::PowerFlowModel(const PowerSystemGraph& graph, Ordering ordering,
                               const Scheduler& scheduler)
    : graph_(&graph) {
  const std::size_t n = graph.size();
  if (graph.slack < 0 || static_cast<std::size_t>(graph.slack) >= n) {
    throw Error(ErrorCode::NoSlack, "power flow needs exactly one slack bus");
  }
  auto t0 = Clock::now();
  ybus_ = build_admittance(graph, scheduler);
  assembly_ms_ = ms_since(t0);

  t0 = Clock::now();
  reduced_index_.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) == graph.slack) continue;
    reduced_index_[i] = static_cast<int>(reduced_bus_.size());
    reduced_bus_.push_back(static_cast<int>(i));
  }
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : graph.edges) {
    const int a = reduced_index_[e.from], b = reduced_index_[e.to];
    if (a >= 0 && b >= 0) pairs.emplace_back(a, b);
  }
  const PatternGraph pattern = PatternGraph::from_edges(reduced_bus_.size(), pairs);
  bus_analysis_ =
      std::make_shared<const SymbolicAnalysis>(analyze(pattern, ordering, scheduler));

  const std::size_t m = reduced_bus_.size();
  std::vector<int> newton_blocks(m), bpp_blocks(m);
  theta_var_.assign(n, -1);
  vm_var_.assign(n, -1);
  bpp_var_.assign(n, -1);
  int next_newton = 0, next_bpp = 0;
  for (std::size_t r = 0; r < m; ++r) {
    const int bus = reduced_bus_[r];
    const bool pq = graph.buses[bus].type == BusType::PQ;
    newton_blocks[r] = pq ? 2 : 1;
    bpp_blocks[r] = pq ? 1 : 0;
    theta_var_[bus] = next_newton;
    if (pq) vm_var_[bus] = next_newton + 1;
    next_newton += newton_blocks[r];
    if (pq) bpp_var_[bus] = next_bpp++;
  }
  newton_analysis_ = std::make_shared<const SymbolicAnalysis>(
      expand(*bus_analysis_, newton_blocks, scheduler));
  bpp_analysis_ = std::make_shared<const SymbolicAnalysis>(
      expand(*bus_analysis_, bpp_blocks, scheduler));
  symbolic_ms_ = ms_since(t0);
}

SparseSystem<double> build_newton_system(const PowerFlowModel& model,
                                         std::span<const double> vm,
                                         std::span<const double> va,
                                         const Scheduler& scheduler) {
  const PowerSystemGraph& g = model.graph();
  check_state(g, vm, va);
  const AdmittanceGraph& y = model.ybus();
  SparseSystem<double> jac(model.newton_analysis());
  const SymbolicAnalysis& a = jac.analysis();
  auto values = jac.values();
  const auto reduced = model.reduced_bus();

  scheduler.run_nodal(reduced.size(), [&](std::size_t r) {
    const int i = reduced[r];
    const int ti = model.theta_var(i);
    const int vi_var = model.vm_var(i);
    for (int var : {ti, vi_var}) {
      if (var < 0) continue;
      const int row = a.position[var];
      std::fill(values.begin() + static_cast<long>(a.row_ptr[row]),
                values.begin() + static_cast<long>(a.row_ptr[row + 1]), 0.0);
    }
    const double vi = vm[i];
    const double gii = y.diag[i].real(), bii = y.diag[i].imag();
    double p = vi * gii, q = -vi * bii;  // self term of the injection sums
    for (const auto& e : y.rows[i]) {
      const int j = e.bus;
      const double gij = e.y.real(), bij = e.y.imag();
      const double th = va[i] - va[j];
      const double c = std::cos(th), s = std::sin(th);
      const double gc_bs = gij * c + bij * s;
      const double gs_bc = gij * s - bij * c;
      p += vm[j] * gc_bs;
      q += vm[j] * gs_bc;
      const int tj = model.theta_var(j);
      const int vj = model.vm_var(j);
      if (tj >= 0) {
        jac.add(ti, tj, vi * vm[j] * gs_bc);
        if (vi_var >= 0) jac.add(vi_var, tj, -vi * vm[j] * gc_bs);
      }
      if (vj >= 0) {
        jac.add(ti, vj, vi * gc_bs);
        if (vi_var >= 0) jac.add(vi_var, vj, vi * gs_bc);
      }
    }
    p *= vi;
    q *= vi;
    jac.add(ti, ti, -q - bii * vi * vi);
    if (vi_var >= 0) {
      jac.add(ti, vi_var, p / vi + gii * vi);
      jac.add(vi_var, ti, p - gii * vi * vi);
      jac.add(vi_var, vi_var, q / vi - bii * vi);
    }
  });
  return jac;
}

FastDecoupledSystems build_fd_systems(const PowerFlowModel& model,
                                      const Scheduler& scheduler) {
  const PowerSystemGraph& g = model.graph();
  const AdmittanceGraph& y = model.ybus();
  FastDecoupledSystems fd{SparseSystem<double>(model.bp_analysis()),
                          SparseSystem<double>(model.bpp_analysis())};
  const auto reduced = model.reduced_bus();

  scheduler.run_nodal(reduced.size(), [&](std::size_t r) {
    const int i = reduced[r];
    const int row = model.bp_var(i);
    for (int e : g.adjacency[i]) {
      const Branch& br = g.edges[e];
      if (br.x == 0.0) continue;
      const double b = 1.0 / br.x;
      fd.bp.add(row, row, b);
      const int other = model.bp_var(g.other_end(e, i));
      if (other >= 0) fd.bp.add(row, other, -b);
    }
    const int qrow = model.bpp_var(i);
    if (qrow < 0) return;
    fd.bpp.add(qrow, qrow, -y.diag[i].imag());
    for (const auto& entry : y.rows[i]) {
      const int other = model.bpp_var(entry.bus);
      if (other >= 0) fd.bpp.add(qrow, other, -entry.y.imag());
    }
  });
  return fd;
}

PowerFlowSolution solve_newton(const PowerSystemGraph& graph,
                               const PowerFlowConfig& config) {
  const auto t0 = Clock::now();
  Runner runner(graph, config);
  PowerFlowSolution sol = runner.newton(runner.start(), config.newton_max_iter);
  sol.times.total_ms = ms_since(t0);
  return sol;
}

PowerFlowSolution solve_fast_decoupled(const PowerSystemGraph& graph,
                                       const PowerFlowConfig& config) {
  const auto t0 = Clock::now();
  Runner runner(graph, config);
  PowerFlowSolution sol = runner.fast_decoupled(runner.start(), config.fd_max_iter);
  sol.times.total_ms = ms_since(t0);
  return sol;
}

PowerFlowSolution solve_auto(const PowerSystemGraph& graph,
                             const PowerFlowConfig& config) {
  const auto t0 = Clock::now();
  Runner runner(graph, config);
  PowerFlowSolution fd = runner.fast_decoupled(runner.start(), config.fd_max_iter);
  if (fd.converged) {
    fd.times.total_ms = ms_since(t0);
    return fd;
  }
  PowerFlowSolution nr = runner.newton(State{fd.vm, fd.va}, config.newton_max_iter);
  nr.fd_iterations = fd.iterations;
  nr.iterations = fd.iterations + nr.newton_iterations;
  nr.initial_mismatch = fd.initial_mismatch;
  nr.mismatch_trace.insert(nr.mismatch_trace.begin(), fd.mismatch_trace.begin(),
                           fd.mismatch_trace.end());
  // model construction is shared; count it once
  nr.times.assembly_ms += fd.times.assembly_ms - runner.model_assembly_ms();
  nr.times.factor_ms += fd.times.factor_ms;
  nr.times.solve_ms += fd.times.solve_ms;
  nr.times.total_ms = ms_since(t0);
  return nr;
}

PowerFlowSolution solve_power_flow(const PowerSystemGraph& graph,
                                   const PowerFlowConfig& config) {
  switch (config.method) {
    case Method::Newton: return solve_newton(graph, config);
    case Method::FastDecoupled: return solve_fast_decoupled(graph, config);
    case Method::Auto: return solve_auto(graph, config);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

}  // namespace gridflow
