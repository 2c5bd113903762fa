#pragma once

// Differential comparison of two specs: distinguishing packets in each
// direction, or a two-way unsat proof of equivalence.

#include <string>
#include <utility>
#include <vector>

#include "tdforge/corpus.hpp"
#include "tdforge/interp.hpp"
#include "tdforge/solver.hpp"

namespace tdforge {

struct DiffConfig {
  AcceptMode mode = AcceptMode::kStrict;
  int max_witnesses = 5;
  SolverConfig solver;
};

/// Witnesses accepted by `left` and rejected by `right`.
struct DirectionResult {
  VerdictKind status = VerdictKind::kUnknown;   // kSat when witnesses were found
  std::vector<TestPacket> witnesses;
  SolverVerdict last;                           // verdict of the final query
};

DirectionResult diff_one_direction(const Spec& left, const Spec& right, const DiffConfig& cfg);

enum class DiffKind { kEquivalent, kLeftPermissive, kRightPermissive, kIncomparable, kInconclusive };

std::string_view to_string(DiffKind kind);

struct DiffResult {
  DiffKind kind = DiffKind::kInconclusive;
  std::vector<TestPacket> left_witnesses;    // accepted by left only
  std::vector<TestPacket> right_witnesses;   // accepted by right only
  std::pair<SolverVerdict, SolverVerdict> verdicts;
};

/// Both directions, run concurrently.
DiffResult equiv(const Spec& left, const Spec& right, const DiffConfig& cfg);

/// Exit code for the `equiv` command: 0, 10, 11, 12 or 20.
int exit_code(DiffKind kind);

/// Replays `packet` on both specs and prints both outcomes.
std::string localization_report(const Spec& left, const Spec& right, const Bytes& packet, AcceptMode mode);

}  // namespace tdforge
