#include "tdforge/testgen.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tdforge/hash.hpp"

namespace tdforge {

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::kPositive: return "positive";
    case Polarity::kNegative: return "negative";
    case Polarity::kBoth: return "both";
  }
  return "?";
}

std::string verify_label(const Spec& spec, const FirstOrderProgram& program, const Bytes& bytes,
                         Label label, AcceptMode mode) {
  Validation v = validate(spec, bytes, mode);
  ReplayResult r = replay(program, bytes, mode);
  if (!(v.outcome == r.outcome)) {
    return "interpreter (" + describe(v.outcome) + ") and program replay (" + describe(r.outcome) +
           ") disagree";
  }
  if (v.accepted != (label == Label::kPositive)) {
    return "labelled " + std::string(to_string(label)) + " but the interpreter reports " + describe(v.outcome);
  }
  return "";
}

namespace {

struct QueryPlan {
  std::string name;
  QueryKind kind;
  NegativeClass cls;
  Label label;
};

std::vector<QueryPlan> query_plans(const GenConfig& cfg) {
  std::vector<QueryPlan> out;
  if (cfg.polarity != Polarity::kNegative) {
    out.push_back({"positive", QueryKind::kPositive, NegativeClass::kAny, Label::kPositive});
  }
  if (cfg.polarity != Polarity::kPositive) {
    out.push_back({"negative:truncated", QueryKind::kNegative, NegativeClass::kTruncated, Label::kNegative});
    out.push_back({"negative:rejected", QueryKind::kNegative, NegativeClass::kRejected, Label::kNegative});
    if (cfg.mode == AcceptMode::kStrict) {
      out.push_back({"negative:trailing", QueryKind::kNegative, NegativeClass::kTrailing, Label::kNegative});
    }
  }
  return out;
}

bool class_matches(NegativeClass cls, const ParseOutcome& outcome) {
  if (cls == NegativeClass::kAny) return true;
  if (outcome.succeeded()) return false;
  switch (outcome.failure().reason) {
    case FailureReason::kInsufficientInput: return cls == NegativeClass::kTruncated;
    case FailureReason::kConstraintViolated:
    case FailureReason::kEnumOutOfRange:
    case FailureReason::kNoCaseMatched: return cls == NegativeClass::kRejected;
    case FailureReason::kTrailingBytes: return cls == NegativeClass::kTrailing;
  }
  return false;
}

std::string trace_text(const BranchTrace& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
  return s + "]";
}

struct Harvest {
  QueryRecord record;
  std::vector<Bytes> packets;
  int unknowns = 0;
  std::vector<std::string> warnings;
  bool realizability_unknown() const { return record.models == 0 && record.verdict == VerdictKind::kUnknown; }
};

Harvest harvest(const FirstOrderProgram& prog, const QueryPlan& plan, const BranchTrace& prefix,
                const GenConfig& cfg) {
  Harvest h;
  h.record.prefix = prefix;
  h.record.query = plan.name;
  QuerySpec q;
  q.kind = plan.kind;
  q.mode = cfg.mode;
  q.instrumented = true;
  q.trace_prefix = prefix;
  q.min_branch_depth = static_cast<int>(prefix.size());
  q.negative_class = plan.cls;
  // Small size bounds first, escalating only on unsat: keeps packets short.
  std::vector<std::size_t> ladder;
  for (std::size_t b : {std::size_t{16}, std::size_t{256}}) {
    if (b < cfg.solver.max_packet_size) ladder.push_back(b);
  }
  ladder.push_back(cfg.solver.max_packet_size);
  std::size_t rung = 0;
  for (int k = 0; k < cfg.quota; ++k) {
    q.max_input_size = ladder[rung];
    SolveResult r;
    try {
      r = solve(build_query(q, prog), cfg.solver);
    } catch (const ModelTooLarge& e) {
      h.warnings.push_back(plan.name + " at " + trace_text(prefix) + ": " + e.what());
      h.record.verdict = VerdictKind::kUnknown;
      ++h.unknowns;
      break;
    } catch (const std::runtime_error& e) {
      throw SolverFailure(plan.name + " at " + trace_text(prefix) + ": " + e.what());
    }
    h.record.verdict = r.verdict.kind;
    if (r.verdict.kind == VerdictKind::kCrash) {
      throw SolverFailure("solver failed on " + plan.name + " at " + trace_text(prefix) + ": " +
                          r.verdict.describe());
    }
    if (r.verdict.kind == VerdictKind::kUnknown) {
      ++h.unknowns;
      h.warnings.push_back(plan.name + " at " + trace_text(prefix) + ": " + r.verdict.describe());
      break;
    }
    if (r.verdict.kind == VerdictKind::kUnsat) {
      if (rung + 1 == ladder.size()) break;
      ++rung;
      --k;
      continue;
    }
    h.packets.push_back(*r.packet);
    q.blocking.push_back(*r.packet);
    ++h.record.models;
  }
  if (h.record.models > 0 && h.record.verdict != VerdictKind::kUnknown) h.record.verdict = VerdictKind::kSat;
  return h;
}

class Generator {
 public:
  Generator(const Spec& spec, const FirstOrderProgram& prog, const GenConfig& cfg)
      : spec_(spec), prog_(prog), cfg_(cfg), plans_(query_plans(cfg)) {}

  GenResult run() {
    if (cfg_.quota < 1 || cfg_.max_tests < 1 || cfg_.branch_depth < 0) {
      throw std::invalid_argument("quota and max-tests must be positive, depth non-negative");
    }
    visit({});
    finish_report();
    return {std::move(corpus_), std::move(report_)};
  }

 private:
  void visit(const BranchTrace& prefix) {
    if (stopped_) return;
    std::vector<Harvest> results = harvest_all(prefix);

    bool realizable = false;
    bool unknown = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
      Harvest& h = results[i];
      report_.queries.push_back(h.record);
      report_.unknowns += h.unknowns;
      for (auto& w : h.warnings) report_.warnings.push_back(std::move(w));
      if (prefix.empty() && plans_[i].kind == QueryKind::kPositive && h.record.verdict == VerdictKind::kUnsat) {
        report_.root_positive_unsat = true;
      }
      realizable = realizable || h.record.models > 0;
      unknown = unknown || h.realizability_unknown();
      for (Bytes& b : h.packets) admit(std::move(b), plans_[i], prefix);
    }
    if (report_.unknowns > 0) report_.incomplete = true;
    if (report_.unknowns > cfg_.unknown_budget) {
      report_.budget_exceeded = true;
      stopped_ = true;
    }
    if (stopped_ || unknown || !realizable) return;
    if (static_cast<int>(prefix.size()) >= cfg_.branch_depth) return;

    int arity = 0;
    for (int id : branches_after(prog_, prefix)) arity = std::max(arity, prog_.branch_points[id].arity);
    for (int o = 0; o < arity && !stopped_; ++o) {
      BranchTrace child = prefix;
      child.push_back(o);
      visit(child);
    }
  }

  std::vector<Harvest> harvest_all(const BranchTrace& prefix) {
    unsigned workers = cfg_.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg_.workers;
    std::vector<Harvest> out;
    if (workers <= 1) {
      for (const auto& plan : plans_) out.push_back(harvest(prog_, plan, prefix, cfg_));
      return out;
    }
    std::vector<std::future<Harvest>> futures;
    for (const auto& plan : plans_) {
      futures.push_back(std::async(std::launch::async, [&, plan] { return harvest(prog_, plan, prefix, cfg_); }));
    }
    for (auto& f : futures) out.push_back(f.get());
    return out;
  }

  void admit(Bytes bytes, const QueryPlan& plan, const BranchTrace& prefix) {
    if (stopped_) return;
    const std::string where = plan.name + " model " + to_hex(bytes) + " at prefix " + trace_text(prefix);
    if (std::string why = verify_label(spec_, prog_, bytes, plan.label, cfg_.mode); !why.empty()) {
      throw EncoderBug(where + ": " + why);
    }
    ReplayResult r = replay(prog_, bytes, cfg_.mode);
    if (!class_matches(plan.cls, r.outcome)) {
      throw EncoderBug(where + ": failure class does not match (" + describe(r.outcome) + ")");
    }
    if (r.trace.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), r.trace.begin())) {
      throw EncoderBug(where + ": replay trace " + trace_text(r.trace) + " does not extend the prefix");
    }
    if (!seen_.insert(bytes).second) return;
    corpus_.push_back(TestPacket::make(std::move(bytes), plan.label, std::move(r.trace), plan.name));
    if (static_cast<int>(corpus_.size()) >= cfg_.max_tests) {
      report_.truncated = true;
      stopped_ = true;
    }
  }

  void finish_report() {
    for (const auto& b : prog_.branch_points) {
      report_.branches.push_back({b.id, b.kind, b.label, std::vector<int>(static_cast<std::size_t>(b.arity), 0)});
    }
    for (const auto& p : corpus_) {
      ReplayResult r = replay(prog_, p.bytes, cfg_.mode);
      for (std::size_t i = 0; i < r.trace.size(); ++i) {
        ++report_.branches[static_cast<std::size_t>(r.visited[i])].hits[static_cast<std::size_t>(r.trace[i])];
      }
    }
    if (report_.root_positive_unsat) {
      report_.warnings.push_back("positive query is unsat at the root: the specification always fails");
    }
    if (report_.budget_exceeded) {
      report_.warnings.push_back("solver unknown budget exceeded (" + std::to_string(report_.unknowns) +
                                 " unknowns); corpus is partial");
    }
  }

  const Spec& spec_;
  const FirstOrderProgram& prog_;
  const GenConfig& cfg_;
  std::vector<QueryPlan> plans_;
  std::vector<TestPacket> corpus_;
  std::set<Bytes> seen_;
  CoverageReport report_;
  bool stopped_ = false;
};

}  // namespace

GenResult gen_tests(const Spec& spec, const FirstOrderProgram& program, const GenConfig& cfg) {
  return Generator(spec, program, cfg).run();
}

GenResult gen_tests(const Spec& spec, const GenConfig& cfg) {
  FirstOrderProgram prog = specialize(spec);
  return gen_tests(spec, prog, cfg);
}

std::string CoverageReport::to_json() const {
  using ordered_json = nlohmann::ordered_json;
  ordered_json doc;
  ordered_json br = ordered_json::array();
  for (const auto& b : branches) {
    std::vector<int> missing;
    for (std::size_t o = 0; o < b.hits.size(); ++o) {
      if (b.hits[o] == 0) missing.push_back(static_cast<int>(o));
    }
    br.push_back({{"id", b.id},
                  {"kind", b.kind == BranchKind::kConstraint ? "constraint" : "casetype"},
                  {"label", b.label},
                  {"arity", b.hits.size()},
                  {"hits", b.hits},
                  {"missing", missing}});
  }
  doc["branches"] = std::move(br);
  ordered_json qs = ordered_json::array();
  for (const auto& q : queries) {
    qs.push_back({{"prefix", q.prefix},
                  {"query", q.query},
                  {"verdict", std::string(to_string(q.verdict))},
                  {"models", q.models}});
  }
  doc["queries"] = std::move(qs);
  doc["unknowns"] = unknowns;
  doc["incomplete"] = incomplete;
  doc["budget_exceeded"] = budget_exceeded;
  doc["truncated"] = truncated;
  doc["root_positive_unsat"] = root_positive_unsat;
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

std::string CoverageReport::summary() const {
  std::ostringstream os;
  for (const auto& b : branches) {
    os << "b" << b.id << " " << (b.kind == BranchKind::kConstraint ? "constraint" : "casetype") << " "
       << b.label << ":";
    for (std::size_t o = 0; o < b.hits.size(); ++o) os << " " << o << "=" << b.hits[o];
    os << "\n";
  }
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  if (incomplete) os << "warning: corpus incomplete (" << unknowns << " unknown verdicts)\n";
  if (truncated) os << "note: stopped at max-tests\n";
  return os.str();
}

}  // namespace tdforge
