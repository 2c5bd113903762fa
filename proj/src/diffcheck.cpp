#include "tdforge/diffcheck.hpp"

#include <future>

#include "tdforge/hash.hpp"
#include "tdforge/program.hpp"
#include "tdforge/testgen.hpp"

namespace tdforge {

std::string_view to_string(DiffKind kind) {
  switch (kind) {
    case DiffKind::kEquivalent: return "Equivalent";
    case DiffKind::kLeftPermissive: return "LeftPermissive";
    case DiffKind::kRightPermissive: return "RightPermissive";
    case DiffKind::kIncomparable: return "Incomparable";
    case DiffKind::kInconclusive: return "Inconclusive";
  }
  return "?";
}

int exit_code(DiffKind kind) {
  switch (kind) {
    case DiffKind::kEquivalent: return 0;
    case DiffKind::kLeftPermissive: return 10;
    case DiffKind::kRightPermissive: return 11;
    case DiffKind::kIncomparable: return 12;
    case DiffKind::kInconclusive: return 20;
  }
  return 20;
}

DirectionResult diff_one_direction(const Spec& left, const Spec& right, const DiffConfig& cfg) {
  const FirstOrderProgram p1 = instrument(specialize(left), InstrumentPolicy::kNone);
  const FirstOrderProgram p2 = instrument(specialize(right), InstrumentPolicy::kNone);
  QuerySpec q;
  q.kind = QueryKind::kDiffLeftNotRight;
  q.mode = cfg.mode;

  DirectionResult out;
  for (int k = 0; k < cfg.max_witnesses; ++k) {
    SolveResult r;
    try {
      r = solve(build_query(q, p1, &p2), cfg.solver);
    } catch (const ModelTooLarge& e) {
      // Unbounded first so that unsat covers every input; on an oversized
      // model ask again for one within the cap.
      if (q.max_input_size) throw SolverFailure(std::string("diff query: ") + e.what());
      q.max_input_size = cfg.solver.max_packet_size;
      --k;
      continue;
    } catch (const std::runtime_error& e) {
      throw SolverFailure(std::string("diff query: ") + e.what());
    }
    out.last = r.verdict;
    if (q.max_input_size && r.verdict.unsat() && out.witnesses.empty()) {
      out.last.kind = VerdictKind::kUnknown;
      out.last.detail = "distinguishing packets exist only above " + std::to_string(*q.max_input_size) + " bytes";
      break;
    }
    if (r.verdict.kind == VerdictKind::kCrash) throw SolverFailure("diff query: " + r.verdict.describe());
    if (!r.verdict.sat()) break;
    const Bytes& b = *r.packet;
    Validation vl = validate(left, b, cfg.mode);
    Validation vr = validate(right, b, cfg.mode);
    if (!vl.accepted || vr.accepted) {
      throw EncoderBug("diff witness " + to_hex(b) + " does not distinguish the specs: left " +
                       describe(vl.outcome) + ", right " + describe(vr.outcome));
    }
    out.witnesses.push_back(TestPacket::make(b, Label::kPositive, replay(p1, b, cfg.mode).trace,
                                             "diff-left-not-right"));
    q.blocking.push_back(b);
  }
  if (!out.witnesses.empty()) {
    out.status = VerdictKind::kSat;
  } else {
    out.status = out.last.kind == VerdictKind::kUnsat ? VerdictKind::kUnsat : VerdictKind::kUnknown;
  }
  return out;
}

DiffResult equiv(const Spec& left, const Spec& right, const DiffConfig& cfg) {
  auto forward = std::async(std::launch::async, [&] { return diff_one_direction(left, right, cfg); });
  DirectionResult backward = diff_one_direction(right, left, cfg);
  DirectionResult fwd = forward.get();

  DiffResult out;
  out.verdicts = {fwd.last, backward.last};
  out.left_witnesses = std::move(fwd.witnesses);
  for (auto& w : backward.witnesses) {
    w.label = Label::kNegative;   // labels are relative to the left spec
    w.query_kind = "diff-right-not-left";
    out.right_witnesses.push_back(std::move(w));
  }
  const VerdictKind a = fwd.status;
  const VerdictKind b = backward.status;
  if (a == VerdictKind::kUnknown || b == VerdictKind::kUnknown) {
    out.kind = DiffKind::kInconclusive;
  } else if (a == VerdictKind::kUnsat && b == VerdictKind::kUnsat) {
    out.kind = DiffKind::kEquivalent;
  } else if (a == VerdictKind::kSat && b == VerdictKind::kUnsat) {
    out.kind = DiffKind::kLeftPermissive;
  } else if (a == VerdictKind::kUnsat && b == VerdictKind::kSat) {
    out.kind = DiffKind::kRightPermissive;
  } else {
    out.kind = DiffKind::kIncomparable;
  }
  return out;
}

std::string localization_report(const Spec& left, const Spec& right, const Bytes& packet, AcceptMode mode) {
  Validation vl = validate(left, packet, mode);
  Validation vr = validate(right, packet, mode);
  std::string s = "packet " + to_spaced_hex(packet) + "\n";
  s += "  left:  " + describe(vl.outcome) + "\n";
  s += "  right: " + describe(vr.outcome) + "\n";
  return s;
}

}  // namespace tdforge
