#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "generators.hpp"
#include "gridflow/case_io.hpp"
#include "gridflow/error.hpp"
#include "gridflow/powerflow.hpp"

using namespace gridflow;

namespace {

const std::string kData = GRIDFLOW_TEST_DATA;

const char* kSingleBus =
    "mpc.baseMVA = 100; mpc.bus = [1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;]; "
    "mpc.gen=[1 0 0 99 -99 1 100 1 99 0;]; mpc.branch=[];";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

std::string two_bus_text(int branch_status) {
  std::ostringstream s;
  s << "mpc.baseMVA = 100;\n"
    << "mpc.bus = [\n 1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;\n"
    << " 2 1 50 10 0 0 1 1 0 230 1 1.1 0.9;\n];\n"
    << "mpc.gen = [1 0 0 99 -99 1 100 1 99 0;];\n"
    << "mpc.branch = [1 2 0.01 0.1 0 0 0 0 0 0 " << branch_status
    << " -360 360;];\n";
  return s.str();
}

}  // namespace

TEST(Parse, MinimalSingleSlackCase) {
  const RawCase c = parse_matpower(kSingleBus);
  EXPECT_EQ(c.base_mva, 100);
  ASSERT_EQ(c.buses.size(), 1u);
  EXPECT_EQ(c.buses[0].type, 3);
  EXPECT_EQ(c.buses[0].base_kv, 345);
  ASSERT_EQ(c.gens.size(), 1u);
  EXPECT_EQ(c.gens[0].qmax, 99);
  EXPECT_TRUE(c.branches.empty());
}

TEST(Parse, MissingBusSection) {
  EXPECT_EQ(code_of([] {
              parse_matpower("mpc.baseMVA = 100; mpc.gen=[]; mpc.branch=[];");
            }),
            ErrorCode::MissingSection);
}

TEST(Parse, MissingBaseMva) {
  EXPECT_EQ(code_of([] {
              parse_matpower("mpc.bus = [1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;]; "
                             "mpc.gen=[]; mpc.branch=[];");
            }),
            ErrorCode::MissingSection);
}

TEST(Parse, ShortRow) {
  EXPECT_EQ(code_of([] {
              parse_matpower("mpc.baseMVA = 100; mpc.bus = [1 3 0 0 0;]; "
                             "mpc.gen=[]; mpc.branch=[];");
            }),
            ErrorCode::RowTooShort);
}

TEST(Parse, MalformedNumberCarriesLine) {
  try {
    parse_matpower("mpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0 0 0 1 1 abc 345 1 1.1 0.9;\n];\n"
                   "mpc.gen=[]; mpc.branch=[];");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedNumber);
    ASSERT_TRUE(e.line().has_value());
    EXPECT_EQ(*e.line(), 3u);
  }
}

TEST(Parse, CommentsExtraColumnsAndOtherFields) {
  const RawCase c = parse_matpower(
      "function mpc = x\n% header\nmpc.version = '2';\nmpc.baseMVA = 100; % base\n"
      "mpc.bus = [\n  1 3 0 0 0 0 1 1.0 0 345 1 1.1 0.9 7 8; % trailing\n"
      "  2 1 1e1 -2.5E-1 0 0 1 1 0 345 1 1.1 0.9\n];\n"
      "mpc.gen = [1 0 0 99 -99 1 100 1 99 0 0 0 0 0 0 0 0 0 0 0 0;];\n"
      "mpc.branch = [1 2 0 0.1 0 0 0 0 0 0 1 -360 360 1 2 3 4;];\n"
      "mpc.gencost = [2 0 0 3 0.01 40 0;];\nmpc.bus_name = {'a'; 'b'};\n");
  ASSERT_EQ(c.buses.size(), 2u);
  EXPECT_DOUBLE_EQ(c.buses[1].pd, 10);
  EXPECT_DOUBLE_EQ(c.buses[1].qd, -0.25);
  EXPECT_EQ(c.branches.size(), 1u);
}

TEST(Parse, Case118Counts) {
  const RawCase c = read_case_file(kData + "/case118.m");
  EXPECT_EQ(c.buses.size(), 118u);
  EXPECT_EQ(c.branches.size(), 186u);
  EXPECT_EQ(c.gens.size(), 54u);
  EXPECT_EQ(c.base_mva, 100);
}

TEST(Parse, MissingFile) {
  try {
    read_case_file(kData + "/does_not_exist.m");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FileNotFound);
    EXPECT_NE(std::string(e.what()).find("does_not_exist.m"), std::string::npos);
  }
}

TEST(Parse, RoundTripIsExact) {
  for (const char* name : {"case118.m", "case14.m", "case9.m"}) {
    const RawCase c = read_case_file(kData + "/" + name);
    EXPECT_EQ(parse_matpower(write_matpower(c, "copy")), c) << name;
  }
  gen::Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    RawCase c = gen::random_case(rng, 2 + t, t);
    for (auto& b : c.buses) b.va = std::sin(b.pd) * 1e-7 + 1.0 / 3.0;
    EXPECT_EQ(parse_matpower(write_matpower(c)), c);
  }
}

TEST(Graph, SingleSlack) {
  const PowerSystemGraph g = to_graph(parse_matpower(kSingleBus));
  EXPECT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.slack, 0);
}

TEST(Graph, Case118) {
  const PowerSystemGraph g = to_graph(read_case_file(kData + "/case118.m"));
  EXPECT_EQ(g.size(), 118u);
  EXPECT_EQ(g.edges.size(), 186u);
  EXPECT_EQ(g.buses[g.slack].id, 69);
  EXPECT_DOUBLE_EQ(g.buses[g.slack].va0, 30.0 * std::numbers::pi / 180.0);
}

TEST(Graph, OutOfServiceBranchIslands) {
  EXPECT_EQ(code_of([] { to_graph(parse_matpower(two_bus_text(0))); }),
            ErrorCode::IslandDetected);
  EXPECT_EQ(to_graph(parse_matpower(two_bus_text(1))).edges.size(), 1u);
}

TEST(Graph, PerUnitConversion) {
  const PowerSystemGraph g = to_graph(parse_matpower(two_bus_text(1)));
  EXPECT_DOUBLE_EQ(g.buses[1].pd, 0.5);
  EXPECT_DOUBLE_EQ(g.buses[1].qd, 0.1);
  EXPECT_EQ(g.edges[0].tap, 1.0);
}

TEST(Graph, ValidationErrors) {
  auto raw = parse_matpower(two_bus_text(1));

  auto two_slack = raw;
  two_slack.buses[1].type = 3;
  two_slack.gens.push_back(two_slack.gens[0]);
  two_slack.gens[1].bus = 2;
  EXPECT_EQ(code_of([&] { to_graph(two_slack); }), ErrorCode::MultipleSlack);

  auto no_slack = raw;
  no_slack.buses[0].type = 2;
  EXPECT_EQ(code_of([&] { to_graph(no_slack); }), ErrorCode::NoSlack);

  auto dangling = raw;
  dangling.branches[0].to = 9;
  EXPECT_EQ(code_of([&] { to_graph(dangling); }), ErrorCode::DanglingReference);

  auto dangling_gen = raw;
  dangling_gen.gens[0].bus = 5;
  EXPECT_EQ(code_of([&] { to_graph(dangling_gen); }), ErrorCode::DanglingReference);

  auto zero = raw;
  zero.branches[0].r = zero.branches[0].x = 0;
  EXPECT_EQ(code_of([&] { to_graph(zero); }), ErrorCode::ZeroImpedance);

  auto no_gen = raw;
  no_gen.gens[0].status = 0;
  EXPECT_EQ(code_of([&] { to_graph(no_gen); }), ErrorCode::MissingGenerator);
}

TEST(Graph, PvWithoutGeneratorBecomesPq) {
  auto raw = parse_matpower(two_bus_text(1));
  raw.buses[1].type = 2;
  EXPECT_EQ(to_graph(raw).buses[1].type, BusType::PQ);
}

TEST(Graph, IsolatedBusIsDropped) {
  auto raw = parse_matpower(two_bus_text(1));
  BusRow iso = raw.buses[1];
  iso.id = 7;
  iso.type = 4;
  raw.buses.push_back(iso);
  const auto g = to_graph(raw);
  EXPECT_EQ(g.size(), 2u);
}

TEST(Graph, ParallelGeneratorsAggregate) {
  auto raw = parse_matpower(two_bus_text(1));
  raw.gens.push_back(raw.gens[0]);
  raw.gens[0].pg = 10;
  raw.gens[1].pg = 15;
  raw.gens[1].vg = 1.05;
  const auto g = to_graph(raw);
  EXPECT_EQ(g.gens[0].units, 2);
  EXPECT_DOUBLE_EQ(g.gens[0].pg, 0.25);
  EXPECT_DOUBLE_EQ(g.gens[0].vset, 1.0);
}

TEST(Solution, SingleBusJson) {
  const auto g = to_graph(parse_matpower(kSingleBus));
  const auto sol = solve_power_flow(g, PowerFlowConfig{});
  const std::string text = write_solution(g, sol, SolutionFormat::Json);
  EXPECT_NE(text.find("\"iterations\": 0"), std::string::npos);
  const auto r = read_solution(text, SolutionFormat::Json);
  ASSERT_EQ(r.buses.size(), 1u);
  EXPECT_EQ(r.buses[0].bus, 1);
  EXPECT_EQ(r.buses[0].vm_pu, 1.0);
  EXPECT_TRUE(r.converged);
}

TEST(Solution, RoundTripBothFormats) {
  const auto g = to_graph(read_case_file(kData + "/case118.m"));
  const auto sol = solve_power_flow(g, PowerFlowConfig{});
  const auto report = make_report(g, sol);
  EXPECT_EQ(report.buses.size(), 118u);
  EXPECT_EQ(report.branches.size(), 186u);
  for (auto fmt : {SolutionFormat::Json, SolutionFormat::Csv}) {
    EXPECT_EQ(read_solution(write_solution(report, fmt), fmt), report);
  }
}
