#include "tdforge/smt.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

#include "tdforge/hash.hpp"

namespace tdforge {

namespace {

std::string reader_name(IntKind kind) {
  std::string s = "parse-uint" + std::to_string(kind.bits);
  if (kind.bits != 8 && kind.endian == Endian::kBig) s += "be";
  return s;
}

std::string pow2(int k) { return (BigInt(1) << k).str(); }

std::string input_at(int i) {
  return i == 0 ? "(Input (current-pos s0))" : "(Input (+ (current-pos s0) " + std::to_string(i) + "))";
}

std::string emit_reader(IntKind kind) {
  const int n = kind.bytes();
  std::ostringstream os;
  os << "(define-fun " << reader_name(kind) << " ((s0 State)) State\n";
  if (n == 1) {
    os << "  (if (and (not (has-failed s0))\n"
          "           (> (remaining-input-size s0) 0))\n"
          "      (success-state\n"
          "        (Input (current-pos s0))\n"
          "        (incr (current-pos s0))\n"
          "        (decr (remaining-input-size s0))\n"
          "        (branch-index s0))\n"
          "      (fail-state s0)))\n";
    return os.str();
  }
  std::string value = "(+";
  for (int i = 0; i < n; ++i) {
    int byte_rank = kind.endian == Endian::kBig ? n - 1 - i : i;
    std::string byte = input_at(i);
    value += byte_rank == 0 ? " " + byte : " (* " + pow2(8 * byte_rank) + " " + byte + ")";
  }
  value += ")";
  os << "  (if (and (not (has-failed s0))\n"
     << "           (>= (remaining-input-size s0) " << n << "))\n"
     << "      (success-state\n"
     << "        " << value << "\n"
     << "        (+ (current-pos s0) " << n << ")\n"
     << "        (- (remaining-input-size s0) " << n << ")\n"
     << "        (branch-index s0))\n"
     << "      (fail-state s0)))\n";
  return os.str();
}

}  // namespace

std::string emit_prelude(bool coverage) {
  std::ostringstream os;
  os << "(set-option :produce-models true)\n"
        "(declare-datatype State ((mk-state (remaining-input-size Int) (current-pos Int)"
        " (has-failed Bool) (return-value Int) (branch-index Int))))\n"
        "(declare-fun Input (Int) Int)\n"
        "(assert (forall ((i Int))\n"
        "                (and (<= 0 (Input i)) (< (Input i) 256))))\n";
  if (coverage) os << "(declare-fun branch-trace (Int) Int)\n";
  os << "(define-fun incr ((n Int)) Int (+ n 1))\n"
        "(define-fun decr ((n Int)) Int (- n 1))\n"
        "(define-fun success-state ((v Int) (pos Int) (rem Int) (bi Int)) State\n"
        "  (mk-state rem pos false v bi))\n"
        ";; failure is absorbing: an already-failed state keeps its return-value.\n"
        "(define-fun fail-state ((s State)) State\n"
        "  (mk-state (remaining-input-size s) (current-pos s) true\n"
        "            (ite (has-failed s) (return-value s) "
     << kRvInsufficient
     << ") (branch-index s)))\n"
        "(define-fun fail-refine ((s State)) State\n"
        "  (mk-state (remaining-input-size s) (current-pos s) true "
     << kRvRefine
     << " (branch-index s)))\n"
        "(define-fun trace-mismatch ((s State)) State\n"
        "  (mk-state (remaining-input-size s) (current-pos s) true "
     << kRvTraceMismatch
     << " -1))\n"
        "(define-fun incr-branch-index ((s State)) State\n"
        "  (mk-state (remaining-input-size s) (current-pos s) (has-failed s) (return-value s)\n"
        "            (+ (branch-index s) 1)))\n";
  for (int bits : {8, 16, 32, 64}) {
    os << emit_reader(IntKind::make(bits, Endian::kBig));
    if (bits != 8) os << emit_reader(IntKind::make(bits, Endian::kLittle));
  }
  os << "(define-fun skip-bytes ((s0 State) (n Int)) State\n"
        "  (if (and (not (has-failed s0))\n"
        "           (>= (remaining-input-size s0) n))\n"
        "      (success-state n (+ (current-pos s0) n) (- (remaining-input-size s0) n)"
        " (branch-index s0))\n"
        "      (fail-state s0)))\n"
        "(define-fun consume-all ((s0 State)) State\n"
        "  (if (not (has-failed s0))\n"
        "      (success-state (remaining-input-size s0)\n"
        "                     (+ (current-pos s0) (remaining-input-size s0)) 0 (branch-index s0))\n"
        "      s0))\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Program encoding

namespace {

struct Term {
  std::string t;
  std::vector<std::string> guards;   // definedness conditions
};

std::string conj(const std::vector<std::string>& parts) {
  if (parts.empty()) return "true";
  if (parts.size() == 1) return parts[0];
  std::string s = "(and";
  for (const auto& p : parts) s += " " + p;
  return s + ")";
}

std::string nl(int indent) { return "\n" + std::string(static_cast<std::size_t>(indent), ' '); }

bool is_name(const std::string& s) { return !s.empty() && s[0] != '('; }

class Encoder {
 public:
  Encoder(const FirstOrderProgram& prog, bool instrumented) : prog_(prog), instr_(instrumented) {}

  std::string body() { return list(prog_.steps, 0, "s0", 2); }

 private:
  std::string fresh_state() { return "s" + std::to_string(next_state_++); }

  Term expr(const LExpr& e) {
    switch (e.kind) {
      case LExpr::Kind::kConst: return {e.value.str(), {}};
      case LExpr::Kind::kVar: return {vars_.at(e.var), {}};
      case LExpr::Kind::kNot: {
        Term a = expr(e.operands[0]);
        return {"(not " + a.t + ")", a.guards};
      }
      case LExpr::Kind::kBinary: break;
    }
    Term a = expr(e.operands[0]);
    Term b = expr(e.operands[1]);
    std::vector<std::string> g = a.guards;
    auto bin = [&](std::string_view op) { return "(" + std::string(op) + " " + a.t + " " + b.t + ")"; };

    if (e.op == BinOp::kAnd || e.op == BinOp::kOr) {
      if (!b.guards.empty()) {
        std::string when = e.op == BinOp::kAnd ? a.t : "(not " + a.t + ")";
        g.push_back("(=> " + when + " " + conj(b.guards) + ")");
      }
      return {bin(e.op == BinOp::kAnd ? "and" : "or"), g};
    }
    g.insert(g.end(), b.guards.begin(), b.guards.end());
    switch (e.op) {
      case BinOp::kAdd: return {bin("+"), g};
      case BinOp::kMul: return {bin("*"), g};
      case BinOp::kSub:
        g.push_back("(>= " + a.t + " " + b.t + ")");
        return {bin("-"), g};
      case BinOp::kShl:
      case BinOp::kShr: {
        const LExpr& amount = e.operands[1];
        if (amount.kind != LExpr::Kind::kConst || amount.value > kMaxShift) {
          throw std::logic_error("shift amount must be a small literal");
        }
        std::string factor = pow2(amount.value.convert_to<int>());
        return {"(" + std::string(e.op == BinOp::kShl ? "*" : "div") + " " + a.t + " " + factor + ")", g};
      }
      case BinOp::kBitAnd:
      case BinOp::kBitOr:
      case BinOp::kBitXor: {
        const std::string limit = pow2(kBitwiseWidth);
        g.push_back("(< " + a.t + " " + limit + ")");
        g.push_back("(< " + b.t + " " + limit + ")");
        const char* op = e.op == BinOp::kBitAnd ? "bvand" : e.op == BinOp::kBitOr ? "bvor" : "bvxor";
        const std::string cast = "(_ int2bv " + std::to_string(kBitwiseWidth) + ")";
        return {"(bv2nat (" + std::string(op) + " (" + cast + " " + a.t + ") (" + cast + " " + b.t + ")))", g};
      }
      case BinOp::kLt: return {bin("<"), g};
      case BinOp::kLe: return {bin("<="), g};
      case BinOp::kGt: return {bin(">"), g};
      case BinOp::kGe: return {bin(">="), g};
      case BinOp::kEq: return {bin("="), g};
      case BinOp::kNe: return {"(not " + bin("=") + ")", g};
      default: break;
    }
    throw std::logic_error("unhandled operator");
  }

  /// Holds exactly when the interpreter would evaluate `e` to true.
  std::string cond(const LExpr& e) {
    Term t = expr(e);
    t.guards.push_back(t.t);
    return conj(t.guards);
  }

  /// Continues with `s` bound to a plain name, introducing a let if needed.
  template <typename F>
  std::string named(const std::string& s, int indent, F&& k) {
    if (is_name(s)) return k(s, indent);
    std::string n = fresh_state();
    return "(let ((" + n + " " + s + "))" + nl(indent + 2) + k(n, indent + 2) + ")";
  }

  /// Binds the result of a state-producing call, short-circuiting on failure.
  std::string then(const std::string& call, const StepList& steps, std::size_t i, int indent,
                   const std::function<void(const std::string&)>& on_bind = {}) {
    if (i + 1 == steps.size()) return call;
    std::string n = fresh_state();
    if (on_bind) on_bind(n);
    return "(let ((" + n + " " + call + "))" + nl(indent + 2) + "(if (has-failed " + n + ") " + n +
           nl(indent + 4) + list(steps, i + 1, n, indent + 4) + "))";
  }

  std::string list(const StepList& steps, std::size_t i, const std::string& s, int indent) {
    if (i == steps.size()) return s;
    const Step& step = steps[i];

    if (const auto* r = std::get_if<ReadInt>(&step.v)) {
      return then("(" + reader_name(r->kind) + " " + s + ")", steps, i, indent,
                  [&](const std::string& n) { vars_[r->dest] = "(return-value " + n + ")"; });
    }
    if (const auto* r = std::get_if<ReadBits>(&step.v)) {
      return then("(" + reader_name(r->kind) + " " + s + ")", steps, i, indent, [&](const std::string& n) {
        const std::string c = "(return-value " + n + ")";
        vars_[r->container] = c;
        int used = 0;
        for (const auto& [dest, width] : r->fields) {
          used += width;
          int shift = r->kind.bits - used;
          std::string shifted = shift == 0 ? c : "(div " + c + " " + pow2(shift) + ")";
          vars_[dest] = width == r->kind.bits ? c : "(mod " + shifted + " " + pow2(width) + ")";
        }
      });
    }
    if (const auto* b = std::get_if<BindParam>(&step.v)) {
      Term v = expr(b->value);
      const std::string name = "v" + std::to_string(b->dest);
      vars_[b->dest] = name;
      return named(s, indent, [&](const std::string& sn, int ind) {
        std::string rest = list(steps, i + 1, sn, ind + 4);
        std::string inner = v.guards.empty()
                                ? rest
                                : "(if " + conj(v.guards) + nl(ind + 4) + rest + nl(ind + 4) +
                                      "(fail-refine " + sn + "))";
        return "(let ((" + name + " " + v.t + "))" + nl(ind + 2) + inner + ")";
      });
    }
    if (const auto* c = std::get_if<CheckConstraint>(&step.v)) {
      std::string C = cond(c->cond);
      return named(s, indent, [&](const std::string& sn, int ind) {
        if (!instr_ || !c->branch) {
          return "(if " + C + nl(ind + 4) + list(steps, i + 1, sn, ind + 4) + nl(ind + 4) +
                 "(fail-refine " + sn + "))";
        }
        const std::string tag = "(branch-trace (branch-index " + sn + "))";
        const std::string next = "(incr-branch-index " + sn + ")";
        return "(if (and " + C + nl(ind + 9) + "(= 0 " + tag + "))" + nl(ind + 4) +
               list(steps, i + 1, next, ind + 4) + nl(ind + 4) + "(if (and (not " + C + ")" +
               nl(ind + 13) + "(= 1 " + tag + "))" + nl(ind + 8) + "(fail-refine " + next + ")" +
               nl(ind + 8) + "(trace-mismatch " + sn + ")))";
      });
    }
    if (const auto* d = std::get_if<Dispatch>(&step.v)) {
      return named(s, indent, [&](const std::string& sn, int ind) {
        std::string chain = dispatch(*d, sn, ind);
        return then(chain, steps, i, ind);
      });
    }
    if (const auto* sk = std::get_if<SkipBytes>(&step.v)) {
      Term len = expr(sk->length);
      return named(s, indent, [&](const std::string& sn, int ind) {
        std::string body = then("(skip-bytes " + sn + " " + len.t + ")", steps, i, ind + 4,
                                [&](const std::string& n) { vars_[sk->dest] = "(return-value " + n + ")"; });
        if (len.guards.empty()) return body;
        return "(if " + conj(len.guards) + nl(ind + 4) + body + nl(ind + 4) + "(fail-refine " + sn + "))";
      });
    }
    const auto& ca = std::get<ConsumeAll>(step.v);
    return then("(consume-all " + s + ")", steps, i, indent,
                [&](const std::string& n) { vars_[ca.dest] = "(return-value " + n + ")"; });
  }

  std::string dispatch(const Dispatch& d, const std::string& s, int indent) {
    Term scrut = expr(d.scrutinee);
    const bool tagged = instr_ && d.branch.has_value();
    const std::string tag = "(branch-trace (branch-index " + s + "))";
    const std::string next = tagged ? "(incr-branch-index " + s + ")" : s;
    std::vector<std::string> matches;
    std::string out;
    std::string closers;
    int ind = indent;
    for (std::size_t k = 0; k < d.cases.size(); ++k) {
      std::vector<std::string> g = scrut.guards;
      g.push_back("(= " + scrut.t + " " + d.cases[k].tag.str() + ")");
      matches.push_back(g.back());
      if (tagged) g.push_back("(= " + std::to_string(k) + " " + tag + ")");
      out += "(if " + conj(g) + nl(ind + 4) + list(d.cases[k].body, 0, next, ind + 4) + nl(ind + 4);
      closers += ")";
      ind += 4;
    }
    if (!tagged) {
      out += "(fail-refine " + s + ")";
    } else {
      std::vector<std::string> any = scrut.guards;
      if (!matches.empty()) {
        any.push_back(matches.size() == 1 ? matches[0] : "(or " + [&] {
          std::string j;
          for (const auto& m : matches) j += (j.empty() ? "" : " ") + m;
          return j;
        }() + ")");
      }
      std::string no_match = matches.empty() ? "true" : "(not " + conj(any) + ")";
      out += "(if (and " + no_match + " (= " + std::to_string(d.cases.size()) + " " + tag + "))" +
             nl(ind + 4) + "(fail-refine " + next + ")" + nl(ind + 4) + "(trace-mismatch " + s + "))";
    }
    return out + closers;
  }

  const FirstOrderProgram& prog_;
  bool instr_;
  int next_state_ = 1;
  std::map<VarId, std::string> vars_;
};

}  // namespace

std::string encode_program(const FirstOrderProgram& program, const std::string& fn_name,
                           bool instrumented) {
  Encoder enc(program, instrumented);
  return "(define-fun " + fn_name + " ((s0 State)) State\n  " + enc.body() + ")\n";
}

std::string function_name(const FirstOrderProgram& program) { return "parse-" + program.entry; }

std::string hashed_function_name(const FirstOrderProgram& program) {
  return function_name(program) + "-" + sha256_hex(dump(program)).substr(0, 8);
}

// ---------------------------------------------------------------------------
// Queries

std::string_view to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::kPositive: return "positive";
    case QueryKind::kNegative: return "negative";
    case QueryKind::kDiffLeftNotRight: return "diff";
  }
  return "?";
}

std::string_view to_string(NegativeClass cls) {
  switch (cls) {
    case NegativeClass::kAny: return "any";
    case NegativeClass::kTruncated: return "truncated";
    case NegativeClass::kRejected: return "rejected";
    case NegativeClass::kTrailing: return "trailing";
  }
  return "?";
}

namespace {

std::string accepts(const std::string& final_state, AcceptMode mode) {
  if (mode == AcceptMode::kPrefix) return "(not (has-failed " + final_state + "))";
  return "(and (not (has-failed " + final_state + ")) (= 0 (remaining-input-size " + final_state + ")))";
}

std::string rejects(const std::string& final_state, AcceptMode mode) {
  if (mode == AcceptMode::kPrefix) return "(has-failed " + final_state + ")";
  return "(or (has-failed " + final_state + ") (> (remaining-input-size " + final_state + ") 0))";
}

std::string pin_packet(const Bytes& p) {
  std::vector<std::string> parts{"(= (remaining-input-size init) " + std::to_string(p.size()) + ")"};
  for (std::size_t i = 0; i < p.size(); ++i) {
    parts.push_back("(= (Input " + std::to_string(i) + ") " + std::to_string(p[i]) + ")");
  }
  return conj(parts);
}

}  // namespace

SmtScript build_query(const QuerySpec& q, const FirstOrderProgram& program,
                      const FirstOrderProgram* other) {
  const bool diff = q.kind == QueryKind::kDiffLeftNotRight;
  if (diff && other == nullptr) throw std::invalid_argument("diff query needs two programs");
  const bool instr = q.instrumented && !diff;

  std::ostringstream os;
  os << emit_prelude(instr);
  std::string fn = function_name(program);
  std::string fn2;
  if (diff) {
    fn = hashed_function_name(program);
    fn2 = hashed_function_name(*other);
    if (fn2 == fn) fn2 += "-r";
    os << encode_program(program, fn, false) << encode_program(*other, fn2, false);
  } else {
    os << encode_program(program, fn, instr);
  }
  const std::string final_state = "(" + fn + " init)";

  os << "(declare-fun init () State)\n"
        "(assert (and (not (has-failed init))\n"
        "             (= 0 (current-pos init))))\n"
        "(assert (>= (remaining-input-size init) 0))\n";
  if (q.max_input_size) os << "(assert (<= (remaining-input-size init) " << *q.max_input_size << "))\n";
  if (instr) os << "(assert (= (branch-index init) 0))\n";

  switch (q.kind) {
    case QueryKind::kPositive:
      os << "(assert (not (has-failed " << final_state << ")))\n";
      if (q.mode == AcceptMode::kStrict) os << "(assert (= 0 (remaining-input-size " << final_state << ")))\n";
      break;
    case QueryKind::kNegative:
      switch (q.negative_class) {
        case NegativeClass::kAny:
          os << "(assert " << rejects(final_state, q.mode) << ")\n";
          break;
        case NegativeClass::kTruncated:
        case NegativeClass::kRejected:
          os << "(assert (and (has-failed " << final_state << ") (= (return-value " << final_state << ") "
             << (q.negative_class == NegativeClass::kTruncated ? kRvInsufficient : kRvRefine) << ")))\n";
          break;
        case NegativeClass::kTrailing:
          if (q.mode == AcceptMode::kPrefix) {
            os << "(assert false)\n";   // prefix mode never rejects for leftover bytes
          } else {
            os << "(assert (and (not (has-failed " << final_state << ")) (> (remaining-input-size "
               << final_state << ") 0)))\n";
          }
          break;
      }
      break;
    case QueryKind::kDiffLeftNotRight:
      os << "(assert " << accepts(final_state, q.mode) << ")\n";
      os << "(assert " << rejects("(" + fn2 + " init)", q.mode) << ")\n";
      break;
  }

  if (instr) {
    if (!q.trace_prefix.empty()) {
      os << "(assert (and";
      for (std::size_t k = 0; k < q.trace_prefix.size(); ++k) {
        os << " (= (branch-trace " << k << ") " << q.trace_prefix[k] << ")";
      }
      os << "))\n";
    }
    int depth = std::max<int>(q.min_branch_depth, static_cast<int>(q.trace_prefix.size()));
    os << "(assert (>= (branch-index " << final_state << ") " << depth << "))\n";
  }
  for (const Bytes& b : q.blocking) os << "(assert (not " << pin_packet(b) << "))\n";
  if (q.fixed_input) os << "(assert " << pin_packet(*q.fixed_input) << ")\n";
  os << "(check-sat)\n";
  return SmtScript{os.str(), EvalPlan{}};
}

std::string SmtScript::render() const {
  return text + plan.size_command() + " ;; input size from model.\n" +
         ";; then " + plan.byte_command(0) + " ... for each byte below the size.\n";
}

// ---------------------------------------------------------------------------
// Model extraction

namespace {

struct SNode {
  std::string atom;
  std::vector<SNode> list;
  bool is_list = false;
};

SNode read_sexpr(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  if (i >= s.size()) throw MalformedSolverOutput("unexpected end of solver answer: '" + s + "'");
  SNode n;
  if (s[i] == '(') {
    n.is_list = true;
    ++i;
    for (;;) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i >= s.size()) throw MalformedSolverOutput("unbalanced solver answer: '" + s + "'");
      if (s[i] == ')') {
        ++i;
        return n;
      }
      n.list.push_back(read_sexpr(s, i));
    }
  }
  if (s[i] == ')') throw MalformedSolverOutput("unbalanced solver answer: '" + s + "'");
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')') {
    n.atom += s[i++];
  }
  return n;
}

BigInt value_of(const SNode& n, const std::string& line) {
  if (!n.is_list) {
    if (n.atom.empty() || n.atom.find_first_not_of("0123456789") != std::string::npos) {
      throw MalformedSolverOutput("expected an integer, got '" + line + "'");
    }
    return BigInt(n.atom);
  }
  if (n.list.size() == 2 && !n.list[0].is_list && n.list[0].atom == "-") return -value_of(n.list[1], line);
  if (n.list.size() == 1 && n.list[0].is_list && n.list[0].list.size() == 2) {
    return value_of(n.list[0].list[1], line);
  }
  throw MalformedSolverOutput("unrecognized solver answer '" + line + "'");
}

}  // namespace

BigInt parse_model_value(const std::string& line) {
  std::size_t i = 0;
  SNode n = read_sexpr(line, i);
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  if (i != line.size()) throw MalformedSolverOutput("trailing text in solver answer '" + line + "'");
  return value_of(n, line);
}

std::optional<Bytes> parse_model(const std::vector<std::string>& transcript, const EvalPlan&,
                                 std::size_t max_packet_size) {
  if (transcript.empty()) throw MalformedSolverOutput("empty solver transcript");
  if (transcript[0] == "unsat" || transcript[0] == "unknown") return std::nullopt;
  if (transcript[0] != "sat") throw MalformedSolverOutput("expected a verdict, got '" + transcript[0] + "'");
  if (transcript.size() < 2) throw MalformedSolverOutput("missing input size in transcript");
  BigInt n = parse_model_value(transcript[1]);
  if (n < 0) throw ModelValueOutOfRange("negative input size " + n.str());
  if (n > max_packet_size) {
    throw ModelTooLarge("model input size " + n.str() + " exceeds the cap of " +
                        std::to_string(max_packet_size) + " bytes");
  }
  const std::size_t size = n.convert_to<std::size_t>();
  if (transcript.size() < size + 2) throw MalformedSolverOutput("transcript is missing input bytes");
  Bytes out;
  out.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    BigInt b = parse_model_value(transcript[k + 2]);
    if (b < 0 || b > 255) throw ModelValueOutOfRange("Input " + std::to_string(k) + " = " + b.str());
    out.push_back(static_cast<std::uint8_t>(b));
  }
  return out;
}

}  // namespace tdforge
