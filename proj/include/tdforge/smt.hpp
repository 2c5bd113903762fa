#pragma once

// SMT-LIB2 encoding of first-order parse programs as State transformers over
// an unbounded Input byte sequence, and query construction on top of it.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdforge/ast.hpp"
#include "tdforge/interp.hpp"
#include "tdforge/program.hpp"

namespace tdforge {

// return-value codes carried by failed states.
inline constexpr int kRvInsufficient = -1;   // a read ran past the end of Input
inline constexpr int kRvRefine = -2;         // constraint, enum or casetype rejection
inline constexpr int kRvTraceMismatch = -3;  // branch outcome disagrees with branch-trace

/// Declarations shared by every script. `coverage` adds branch-trace.
std::string emit_prelude(bool coverage);

/// One define-fun `(fn_name ((s0 State)) State)` for the program. When
/// `instrumented`, tagged branches consult branch-trace.
std::string encode_program(const FirstOrderProgram& program, const std::string& fn_name,
                           bool instrumented);

/// `parse-<entry>`.
std::string function_name(const FirstOrderProgram& program);
/// `parse-<entry>-<8 hex of the program dump>`, for scripts holding two programs.
std::string hashed_function_name(const FirstOrderProgram& program);

enum class QueryKind { kPositive, kNegative, kDiffLeftNotRight };

/// Restricts a Negative query to one failure cause.
enum class NegativeClass {
  kAny,
  kTruncated,   // input ran out
  kRejected,    // constraint, enum or casetype rejection
  kTrailing,    // strict mode: parse succeeded with bytes left over
};

std::string_view to_string(QueryKind kind);
std::string_view to_string(NegativeClass cls);

struct QuerySpec {
  QueryKind kind = QueryKind::kPositive;
  AcceptMode mode = AcceptMode::kStrict;
  bool instrumented = false;
  BranchTrace trace_prefix;
  int min_branch_depth = 0;
  std::vector<Bytes> blocking;
  NegativeClass negative_class = NegativeClass::kAny;
  std::optional<Bytes> fixed_input;   // pins size and every byte
  std::optional<std::size_t> max_input_size;
};

/// Answers to issue after a sat verdict: first `size_term`, then
/// `(byte_fn i)` for each i below the size.
struct EvalPlan {
  std::string size_term = "(remaining-input-size init)";
  std::string byte_fn = "Input";

  std::string size_command() const { return "(eval " + size_term + ")"; }
  std::string byte_command(std::size_t i) const {
    return "(eval (" + byte_fn + " " + std::to_string(i) + "))";
  }
};

struct SmtScript {
  std::string text;   // ends with (check-sat)
  EvalPlan plan;

  /// Script text followed by the eval commands that are known up front.
  std::string render() const;
};

/// Builds a query over `program`. For kDiffLeftNotRight, `other` is the
/// program that must reject.
SmtScript build_query(const QuerySpec& q, const FirstOrderProgram& program,
                      const FirstOrderProgram* other = nullptr);

class MalformedSolverOutput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelValueOutOfRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model size above the configured cap.
class ModelTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMaxPacketSize = 4096;

/// Reads one integer answer: `5`, `(- 1)`, or get-value style `((t) 5)`.
BigInt parse_model_value(const std::string& line);

/// Reconstructs a packet from `sat`, the size answer and the byte answers.
/// Returns nullopt for `unsat` / `unknown` transcripts.
std::optional<Bytes> parse_model(const std::vector<std::string>& transcript, const EvalPlan& plan,
                                 std::size_t max_packet_size = kDefaultMaxPacketSize);

}  // namespace tdforge
