#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gridflow::cli {

/// Stable process exit codes.
enum ExitCode : int { kConverged = 0, kInputError = 1, kNotConverged = 2 };

struct SolveOptions {
  std::string case_path;
  std::string method = "auto";  // newton | fd | auto
  double tol = 1e-8;
  std::optional<int> max_iter;
  bool flat_start = false;
  int threads = 0;
  std::string order = "natural";  // natural | mindeg
  std::string output = "table";   // table | json | csv
  std::string out_file;
};

struct SymbolicOptions {
  std::string case_path;
  std::string order = "natural";
  bool dump_levels = false;
  int threads = 0;
};

struct BenchOptions {
  std::string case_path;
  int repeat = 10;
  std::vector<int> threads;  // parallel configurations; serial always runs
  std::string order = "natural";
  double tol = 1e-8;
  std::string csv_file;
};

int cmd_solve(const SolveOptions& options, std::ostream& out, std::ostream& err);
int cmd_symbolic(const SymbolicOptions& options, std::ostream& out,
                 std::ostream& err);
int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gridflow::cli
