#pragma once

// Coverage-guided test generation: depth-first enumeration of branch-trace
// prefixes, harvesting distinct solver models for each query at each prefix.

#include <stdexcept>
#include <string>
#include <vector>

#include "tdforge/corpus.hpp"
#include "tdforge/interp.hpp"
#include "tdforge/program.hpp"
#include "tdforge/smt.hpp"
#include "tdforge/solver.hpp"

namespace tdforge {

enum class Polarity { kPositive, kNegative, kBoth };

std::string_view to_string(Polarity p);

struct GenConfig {
  int branch_depth = 100;   // maximum trace length explored
  int quota = 2;            // models harvested per query
  int max_tests = 200;
  AcceptMode mode = AcceptMode::kStrict;
  Polarity polarity = Polarity::kBoth;
  int unknown_budget = 10;
  unsigned workers = 0;     // concurrent queries per prefix; 0 = hardware concurrency
  SolverConfig solver;
};

/// Solver model and interpreter disagree: the encoding is wrong.
class EncoderBug : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The solver process misbehaved (exec failure, error output, bad model text).
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BranchCoverage {
  int id = 0;
  BranchKind kind = BranchKind::kConstraint;
  std::string label;
  std::vector<int> hits;   // packets per outcome index
};

struct QueryRecord {
  BranchTrace prefix;
  std::string query;   // "positive", "negative:truncated", ...
  VerdictKind verdict = VerdictKind::kUnknown;   // last verdict of the harvest loop
  int models = 0;
};

struct CoverageReport {
  std::vector<BranchCoverage> branches;
  std::vector<QueryRecord> queries;
  int unknowns = 0;
  bool incomplete = false;          // some subtree was abandoned on Unknown
  bool budget_exceeded = false;     // stopped after too many Unknowns
  bool truncated = false;           // stopped at max_tests
  bool root_positive_unsat = false; // the spec accepts no input at all
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string summary() const;
};

struct GenResult {
  std::vector<TestPacket> corpus;
  CoverageReport report;
};

/// Runs the enumeration. Every packet is replayed and validated before it is
/// emitted; a disagreement throws EncoderBug.
GenResult gen_tests(const Spec& spec, const GenConfig& cfg);

/// The same, over an already specialized program.
GenResult gen_tests(const Spec& spec, const FirstOrderProgram& program, const GenConfig& cfg);

/// Checks one packet against the interpreter and the replayed program.
/// Returns an empty string when `label` is right, otherwise the reason.
std::string verify_label(const Spec& spec, const FirstOrderProgram& program, const Bytes& bytes,
                         Label label, AcceptMode mode);

}  // namespace tdforge
