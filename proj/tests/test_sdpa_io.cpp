#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "soscert/sdp_solver.hpp"
#include "soscert/sdpa_io.hpp"
#include "test_util.hpp"

using namespace soscert;

namespace {

/// Minimal independent grammar validation of the sparse SDPA format: four
/// header records then five-token entry lines with in-range indices. Kept
/// deliberately separate from import_sdpa so the two act as cross-checks.
bool sdpa_grammar_ok(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> records;
  while (std::getline(is, line)) {
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '"' || line[pos] == '*') continue;
    records.push_back(line);
  }
  if (records.size() < 4) return false;
  long m = 0, nblocks = 0;
  {
    std::istringstream ls(records[0]);
    if (!(ls >> m) || m < 0) return false;
  }
  {
    std::istringstream ls(records[1]);
    if (!(ls >> nblocks) || nblocks < 1) return false;
  }
  std::vector<long> sizes;
  {
    std::istringstream ls(records[2]);
    long s;
    while (ls >> s) {
      if (s == 0) return false;
      sizes.push_back(std::labs(s));
    }
    if (static_cast<long>(sizes.size()) != nblocks) return false;
  }
  {
    std::istringstream ls(records[3]);
    double v;
    long count = 0;
    while (ls >> v) ++count;
    if (count != m) return false;
  }
  for (std::size_t r = 4; r < records.size(); ++r) {
    std::istringstream ls(records[r]);
    long k, blk, i, j;
    double v;
    if (!(ls >> k >> blk >> i >> j >> v)) return false;
    std::string extra;
    if (ls >> extra) return false;
    if (k < 0 || k > m) return false;
    if (blk < 1 || blk > nblocks) return false;
    if (i < 1 || j < 1 || i > sizes[blk - 1] || j > sizes[blk - 1]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("smallest instance serializes as expected") {
  SdpProblem prob;
  prob.blocks.push_back({1, BlockKind::kPsd});
  prob.constraints.push_back({{0, 0, 0, 1.0}});
  prob.b = {1.0};

  std::string text = export_sdpa(prob);
  std::istringstream is(text);
  std::string l1, l2, l3, l4, body;
  std::getline(is, l1);
  std::getline(is, l2);
  std::getline(is, l3);
  std::getline(is, l4);
  std::getline(is, body);
  CHECK(l1 == "1");
  CHECK(l2 == "1");
  CHECK(l3 == "1");
  CHECK(l4 == "1.0");
  CHECK(body == "1 1 1 1 1.0");
  CHECK(sdpa_grammar_ok(text));
}

TEST_CASE("export -> import -> export is byte-identical") {
  testutil::Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testutil::random_feasible_sdp(rng, trial % 2 == 0, false);
    std::string text = export_sdpa(inst.prob);
    SdpProblem round = import_sdpa(text);
    std::string text2 = export_sdpa(round);
    REQUIRE(text == text2);
    CHECK(sdpa_grammar_ok(text));
  }
}

TEST_CASE("free blocks are eliminated before export") {
  testutil::Rng rng(4242);
  auto inst = testutil::random_feasible_sdp(rng, false, true);
  double offset = 0.0;
  std::string text = export_sdpa(inst.prob, &offset);
  CHECK(sdpa_grammar_ok(text));
  SdpProblem round = import_sdpa(text);
  for (const SdpBlock& b : round.blocks) CHECK(b.kind != BlockKind::kFree);
  // Same bytes on re-export.
  CHECK(export_sdpa(round) == text);
  // Same optimum up to the recorded constant shift.
  SdpSolution orig = solve(inst.prob);
  SdpSolution red = solve(round);
  REQUIRE(orig.status == SolveStatus::kOptimal);
  REQUIRE(red.status == SolveStatus::kOptimal);
  CHECK(orig.objective == Catch::Approx(red.objective + offset).margin(1e-5));
}

TEST_CASE("solving the exported-then-imported problem matches") {
  testutil::Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = testutil::random_feasible_sdp(rng, false, false);
    SdpSolution a = solve(inst.prob);
    SdpProblem round = import_sdpa(export_sdpa(inst.prob));
    SdpSolution b = solve(round);
    REQUIRE(a.status == b.status);
    if (a.status == SolveStatus::kOptimal) {
      CHECK(a.objective == Catch::Approx(b.objective).margin(1e-6));
    }
  }
}

TEST_CASE("import accepts comments and brace-separated sizes") {
  std::string text =
      "* a comment line\n"
      "\" another comment\n"
      "2\n"
      "2\n"
      "{2, -1}\n"
      "1.0 0.5\n"
      "0 1 1 2 -3.0\n"
      "1 1 1 1 1.0\n"
      "2 2 1 1 2.0\n";
  SdpProblem prob = import_sdpa(text);
  REQUIRE(prob.blocks.size() == 2);
  CHECK(prob.blocks[0].kind == BlockKind::kPsd);
  CHECK(prob.blocks[0].size == 2);
  CHECK(prob.blocks[1].kind == BlockKind::kDiag);
  CHECK(prob.blocks[1].size == 1);
  REQUIRE(prob.num_constraints() == 2);
  CHECK(prob.b[1] == 0.5);
  REQUIRE(prob.objective.size() == 1);
  CHECK(prob.objective[0].value == -3.0);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(import_sdpa("not a problem"), std::invalid_argument);
  CHECK_THROWS_AS(import_sdpa("1\n1\n0\n1.0\n"), std::invalid_argument);
  CHECK_THROWS_AS(import_sdpa("1\n1\n1\n1.0\n1 9 1 1 1.0\n"),
                  std::invalid_argument);
}
