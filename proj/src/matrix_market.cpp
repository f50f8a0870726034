#include "gridflow/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <utility>

#include "gridflow/error.hpp"

namespace gridflow {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

CooMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::MissingSection, "empty Matrix Market stream");
  }
  ++line_no;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" ||
      lower(format) != "coordinate") {
    throw Error(ErrorCode::MissingSection,
                "expected '%%MatrixMarket matrix coordinate' banner", line_no);
  }
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer" && field != "double") {
    throw Error(ErrorCode::InvalidArgument, "unsupported field '" + field + "'",
                line_no);
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw Error(ErrorCode::InvalidArgument,
                "unsupported symmetry '" + symmetry + "'", line_no);
  }

  CooMatrix m;
  std::size_t nnz = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream row(line);
    if (!have_size) {
      if (!(row >> m.rows >> m.cols >> nnz)) {
        throw Error(ErrorCode::MalformedNumber, "bad size line", line_no);
      }
      have_size = true;
      m.entries.reserve(symmetry == "symmetric" ? 2 * nnz : nnz);
      continue;
    }
    long i = 0, j = 0;
    double v = 0.0;
    if (!(row >> i >> j >> v)) {
      throw Error(ErrorCode::MalformedNumber, "bad entry line", line_no);
    }
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > m.rows ||
        static_cast<std::size_t>(j) > m.cols) {
      throw Error(ErrorCode::InvalidArgument, "entry index out of range", line_no);
    }
    m.entries.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
    if (symmetry == "symmetric" && i != j) {
      m.entries.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), v});
    }
  }
  if (!have_size) {
    throw Error(ErrorCode::MissingSection, "missing size line", line_no);
  }
  return m;
}

CooMatrix read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path + "'");
  return read_matrix_market(in);
}

PatternGraph pattern_of(const CooMatrix& matrix) {
  if (matrix.rows != matrix.cols) {
    throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(matrix.entries.size());
  for (const auto& e : matrix.entries) edges.emplace_back(e.row, e.col);
  return PatternGraph::from_edges(matrix.rows, edges);
}

SparseSystem<double> to_system(
    const CooMatrix& matrix, std::shared_ptr<const SymbolicAnalysis> analysis) {
  SparseSystem<double> system(std::move(analysis));
  for (const auto& e : matrix.entries) system.add(e.row, e.col, e.value);
  return system;
}

}  // namespace gridflow
