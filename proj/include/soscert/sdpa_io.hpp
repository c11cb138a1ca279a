#pragma once

#include <cctype>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "soscert/sdp.hpp"

namespace soscert {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos &&
      s.find_first_of("0123456789") != std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace detail

/// Serializes a problem to the sparse SDPA text format (".dat-s"):
/// constraint count, block count, block sizes (negative size = diagonal
/// block), right-hand side, then "k blk i j v" quintuples with k = 0 holding
/// the objective matrix and upper-triangle entries only, in deterministic
/// (k, block, i, j) order.
///
/// Free scalar blocks have no SDPA representation and are pivoted out of the
/// equalities first; the resulting constant objective shift is returned
/// through objective_offset when given.
inline std::string export_sdpa(const SdpProblem& prob,
                               double* objective_offset = nullptr) {
  const SdpProblem* p = &prob;
  SdpProblem reduced;
  FreeElimination elim;
  double offset = 0.0;
  bool has_free = false;
  for (const SdpBlock& b : prob.blocks) {
    if (b.kind == BlockKind::kFree) has_free = true;
  }
  if (has_free) {
    reduced = eliminate_free(prob, elim);
    if (elim.unbounded) {
      throw std::invalid_argument(
          "export_sdpa: unbounded free variable; problem has no cone form");
    }
    offset = elim.objective_offset;
    p = &reduced;
  }
  if (objective_offset) *objective_offset = offset;

  std::ostringstream os;
  os << p->num_constraints() << "\n";
  os << p->blocks.size() << "\n";
  for (std::size_t i = 0; i < p->blocks.size(); ++i) {
    if (i) os << " ";
    os << (p->blocks[i].kind == BlockKind::kDiag ? -p->blocks[i].size
                                                 : p->blocks[i].size);
  }
  os << "\n";
  for (int k = 0; k < p->num_constraints(); ++k) {
    if (k) os << " ";
    os << detail::format_double(p->b[k]);
  }
  os << "\n";

  auto emit = [&os](int k, std::vector<MatEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const MatEntry& a, const MatEntry& b) {
                return std::tie(a.block, a.i, a.j) < std::tie(b.block, b.i, b.j);
              });
    for (const MatEntry& e : entries) {
      if (e.value == 0.0) continue;
      os << k << " " << e.block + 1 << " " << e.i + 1 << " " << e.j + 1 << " "
         << detail::format_double(e.value) << "\n";
    }
  };
  emit(0, p->objective);
  for (int k = 0; k < p->num_constraints(); ++k) emit(k + 1, p->constraints[k]);
  return os.str();
}

/// Parses the sparse SDPA format. Comment lines starting with '"' or '*' are
/// accepted; the block-size line may use (), {} or commas as separators.
inline SdpProblem import_sdpa(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> data_lines;
  auto next_line = [&]() -> std::string {
    while (std::getline(is, line)) {
      std::size_t pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      if (line[pos] == '"' || line[pos] == '*') continue;
      return line;
    }
    throw std::invalid_argument("import_sdpa: unexpected end of input");
  };
  auto clean_numbers = [](std::string s) {
    for (char& c : s) {
      if (c == '(' || c == ')' || c == '{' || c == '}' || c == ',') c = ' ';
    }
    return s;
  };

  SdpProblem prob;
  int m = 0, nblocks = 0;
  {
    std::istringstream ls(clean_numbers(next_line()));
    if (!(ls >> m) || m < 0) throw std::invalid_argument("import_sdpa: bad mDIM");
  }
  {
    std::istringstream ls(clean_numbers(next_line()));
    if (!(ls >> nblocks) || nblocks < 1) {
      throw std::invalid_argument("import_sdpa: bad nBLOCK");
    }
  }
  {
    std::istringstream ls(clean_numbers(next_line()));
    for (int i = 0; i < nblocks; ++i) {
      int sz = 0;
      if (!(ls >> sz) || sz == 0) {
        throw std::invalid_argument("import_sdpa: bad block size");
      }
      prob.blocks.push_back(
          sz < 0 ? SdpBlock{-sz, BlockKind::kDiag} : SdpBlock{sz, BlockKind::kPsd});
    }
  }
  {
    std::istringstream ls(clean_numbers(next_line()));
    prob.b.resize(m);
    for (int k = 0; k < m; ++k) {
      if (!(ls >> prob.b[k])) {
        throw std::invalid_argument("import_sdpa: bad right-hand side");
      }
    }
  }
  prob.constraints.resize(m);
  while (std::getline(is, line)) {
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '"' || line[pos] == '*') continue;
    std::istringstream ls(clean_numbers(line));
    int k, blk, i, j;
    double v;
    if (!(ls >> k >> blk >> i >> j >> v)) {
      throw std::invalid_argument("import_sdpa: malformed entry line: " + line);
    }
    if (k < 0 || k > m || blk < 1 || blk > nblocks) {
      throw std::invalid_argument("import_sdpa: entry indices out of range");
    }
    if (i > j) std::swap(i, j);
    MatEntry e{blk - 1, i - 1, j - 1, v};
    if (k == 0) {
      prob.objective.push_back(e);
    } else {
      prob.constraints[k - 1].push_back(e);
    }
  }
  prob.validate();
  return prob;
}

}  // namespace soscert
