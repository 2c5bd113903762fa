#pragma once

// First-order lowering of a checked Spec: parameterized types are
// monomorphized, combinator structure is inlined into primitive steps, and
// value constraints / casetype dispatches are tagged as branch points.

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "tdforge/ast.hpp"
#include "tdforge/eval.hpp"
#include "tdforge/interp.hpp"

namespace tdforge {

using VarId = int;

/// Expression over program variables (identifiers already resolved).
struct LExpr {
  enum class Kind { kConst, kVar, kNot, kBinary };

  Kind kind = Kind::kConst;
  BigInt value;
  VarId var = -1;
  BinOp op = BinOp::kAdd;
  std::vector<LExpr> operands;

  static LExpr constant(BigInt v);
  static LExpr variable(VarId v);
  static LExpr negate(LExpr e);
  static LExpr binary(BinOp op, LExpr lhs, LExpr rhs);
};

struct VarInfo {
  std::string name;       // qualified source path
  bool visible = true;    // reported in ParseSuccess bindings (fields, not params/containers)
};

struct Step;
using StepList = std::vector<Step>;

/// Reads one integer into `dest`.
struct ReadInt {
  VarId dest;
  IntKind kind;
  std::string field;
};

/// Reads a container integer and splits it MSB-first into bitfields.
struct ReadBits {
  VarId container;
  IntKind kind;
  std::vector<std::pair<VarId, int>> fields;   // (dest, width)
  std::string field;                           // first bitfield, for failure reports
};

/// Binds a type argument at an instantiation site. Fails with
/// ConstraintViolated(field) when the argument expression is undefined.
struct BindParam {
  VarId dest;
  LExpr value;
  std::string field;
};

struct CheckConstraint {
  LExpr cond;
  std::optional<int> branch;
  FailureReason reason = FailureReason::kConstraintViolated;
  std::string field;
  SourceSpan span;
};

struct DispatchCase {
  BigInt tag;
  StepList body;
};

struct Dispatch {
  LExpr scrutinee;
  std::vector<DispatchCase> cases;
  std::optional<int> branch;
  std::string casetype;
  SourceSpan span;
};

struct SkipBytes {
  VarId dest;   // bound to the length
  LExpr length;
  std::string field;
};

struct ConsumeAll {
  VarId dest;   // bound to the number of bytes consumed
  std::string field;
};

struct Step {
  std::variant<ReadInt, ReadBits, BindParam, CheckConstraint, Dispatch, SkipBytes, ConsumeAll> v;
};

enum class BranchKind { kConstraint, kCasetype };

struct BranchPoint {
  int id = 0;
  int arity = 2;
  BranchKind kind = BranchKind::kConstraint;
  std::string label;   // field path or casetype name
  SourceSpan span;
};

struct FirstOrderProgram {
  std::string entry;
  StepList steps;
  std::vector<VarInfo> vars;
  std::vector<BranchPoint> branch_points;   // index == id
};

/// Outcome indices, one per tagged branch encountered. Constraints: 0 holds,
/// 1 fails. Casetypes: case position in declaration order, no-match last.
using BranchTrace = std::vector<int>;

enum class InstrumentPolicy { kDefault, kNone, kConstraintsOnly, kCasetypesOnly };

/// Lowers `spec` and tags branches with the default policy.
FirstOrderProgram specialize(const Spec& spec);

/// Re-assigns branch ids 0..n-1 in program order under `policy`.
FirstOrderProgram instrument(FirstOrderProgram program, InstrumentPolicy policy);

struct ReplayResult {
  bool accepted = false;
  ParseOutcome outcome;
  BranchTrace trace;
  std::vector<int> visited;   // branch id per trace entry
};

/// Executes the program concretely; the outcome matches `validate`.
ReplayResult replay(const FirstOrderProgram& program, std::span<const std::uint8_t> input,
                    AcceptMode mode = AcceptMode::kStrict);

/// Branch ids that can occur at trace position `prefix.size()` on some
/// execution whose trace starts with `prefix`.
std::set<int> branches_after(const FirstOrderProgram& program, const BranchTrace& prefix);

/// Indented text dump.
std::string dump(const FirstOrderProgram& program);
std::string print_lexpr(const LExpr& e);

/// Lint: every variable is assigned exactly once and only read after
/// assignment. Returns violations.
std::vector<std::string> single_assignment_violations(const FirstOrderProgram& program);

}  // namespace tdforge
