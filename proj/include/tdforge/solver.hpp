#pragma once

// External SMT solver invocation: one subprocess per query, script on its
// input stream, answers read back line by line.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "tdforge/process.hpp"
#include "tdforge/smt.hpp"

namespace tdforge {

enum class VerdictKind { kSat, kUnsat, kUnknown, kCrash };
enum class UnknownReason { kNone, kTimeout, kSolverSaidUnknown };

std::string_view to_string(VerdictKind kind);

struct SolverVerdict {
  VerdictKind kind = VerdictKind::kCrash;
  UnknownReason reason = UnknownReason::kNone;   // kUnknown only
  std::vector<std::string> transcript;           // verdict line, then eval answers
  std::string detail;                            // crash excerpt or stderr tail
  std::optional<ExitStatus> exit;

  bool sat() const { return kind == VerdictKind::kSat; }
  bool unsat() const { return kind == VerdictKind::kUnsat; }
  std::string describe() const;
};

inline constexpr char kDefaultSolverCommand[] = "z3 -in";
inline constexpr char kSolverEnvVar[] = "TDFORGE_SOLVER";

struct SolverConfig {
  std::vector<std::string> command = split_command(kDefaultSolverCommand);
  std::chrono::milliseconds timeout{30000};
  std::size_t max_packet_size = kDefaultMaxPacketSize;
};

/// `flag` if given, else $TDFORGE_SOLVER, else "z3 -in".
std::vector<std::string> resolve_solver_command(const std::optional<std::string>& flag);

/// Runs one query. On sat, the eval plan is issued interactively: the size
/// first, then one eval per byte (skipped when the size exceeds the cap).
SolverVerdict run_solver(const SmtScript& script, const SolverConfig& cfg);

/// run_solver followed by parse_model. Throws MalformedSolverOutput,
/// ModelValueOutOfRange or ModelTooLarge on a bad sat answer.
struct SolveResult {
  SolverVerdict verdict;
  std::optional<Bytes> packet;   // present iff sat
};
SolveResult solve(const SmtScript& script, const SolverConfig& cfg);

/// Solves independent scripts on at most `workers` concurrent processes
/// (0 = hardware concurrency). Results are in input order.
std::vector<SolveResult> solve_all(const std::vector<SmtScript>& scripts, const SolverConfig& cfg,
                                   unsigned workers = 0);

}  // namespace tdforge
