// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Each criterion also carries a wall-clock limit.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "test_support.hpp"
#include "tdforge/diffcheck.hpp"
#include "tdforge/program.hpp"
#include "tdforge/refine.hpp"
#include "tdforge/smt.hpp"
#include "tdforge/testgen.hpp"

using namespace tdforge;
using testing::data_path;
using testing::load_spec;
using testing::run_cli;

namespace {

struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failed(what);
}

std::string path(const std::string& name) { return data_path(name).string(); }

int exit_of(const CommandResult& r) {
  require(!r.timed_out, "command timed out");
  require(r.status.exited, "command did not exit normally: " + r.status.describe());
  return r.status.code;
}

std::string norm(const std::string& text) {
  std::string s = std::regex_replace(text, std::regex(";[^\n]*"), "");
  s = std::regex_replace(s, std::regex("\\s+"), " ");
  s = std::regex_replace(s, std::regex("\\( "), "(");
  s = std::regex_replace(s, std::regex(" \\)"), ")");
  return s;
}

void require_fragment(const std::string& text, const std::string& fragment, const std::string& name) {
  require(norm(text).find(norm(fragment)) != std::string::npos, "missing " + name);
}

std::vector<TestPacket> read_corpus(const std::filesystem::path& dir) { return read_manifest(dir / "manifest.json"); }

nlohmann::json read_coverage(const std::filesystem::path& dir) {
  return nlohmann::json::parse(read_text_file(dir / "coverage.json"));
}

// Every label agrees with the interpreter.
void require_labels(const Spec& spec, const std::vector<TestPacket>& corpus, AcceptMode mode) {
  for (const auto& p : corpus) {
    const bool accepted = validate(spec, p.bytes, mode).accepted;
    require(accepted == (p.label == Label::kPositive), "label of " + to_hex(p.bytes) + " not confirmed");
  }
}

std::string criterion1() {
  auto r = run_cli({"dump-smt", path("message.3d")});
  require(exit_of(r) == 0, "dump-smt failed: " + r.err);
  const std::string& t = r.out;
  require_fragment(t, R"((declare-fun Input (Int) Int)
(assert (forall ((i Int)) (and (<= 0 (Input i)) (< (Input i) 256)))))",
                   "Input declaration and byte range");
  require_fragment(t, R"((define-fun parse-uint8 ((s0 State)) State
  (if (and (not (has-failed s0)) (> (remaining-input-size s0) 0))
      (success-state (Input (current-pos s0)) (incr (current-pos s0)) (decr (remaining-input-size s0)))",
                   "parse-uint8 structure");
  // Constraint failures carry their own return code; the let-chain is the same.
  const std::string msg = std::regex_replace(t, std::regex("fail-refine"), "fail-state");
  require_fragment(msg, R"((define-fun parse-message ((s0 State)) State
  (let ((s1 (parse-uint8 s0)))
    (if (has-failed s1) s1
      (if (> (return-value s1) 42)
          (parse-uint8 s1)
          (fail-state s1)))))", "parse-message let-chain");
  require_fragment(t, "(declare-fun init () State)", "init declaration");
  require_fragment(t, "(assert (and (not (has-failed init)) (= 0 (current-pos init))))", "init assertion");
  require_fragment(t, "(assert (not (has-failed (parse-message init))))", "goal assertion");
  return "Input range, parse-uint8, parse-message and init/goal assertions present";
}

std::string criterion2() {
  auto dir = testing::fresh_temp_dir("acc2");
  auto r = run_cli({"gen", path("message.3d"), "--depth", "1", "--quota", "2", "--max", "50", "--out", dir.string()});
  require(exit_of(r) == 0, "gen exit " + std::to_string(r.status.code) + ": " + r.err);
  const Spec spec = load_spec("message.3d");
  const auto corpus = read_corpus(dir);
  require_labels(spec, corpus, AcceptMode::kStrict);
  int pos = 0;
  std::map<FailureReason, int> neg;
  for (const auto& p : corpus) {
    if (p.label == Label::kPositive) {
      ++pos;
      require(p.bytes.size() == 2 && p.bytes[0] >= 0x2B, "bad positive " + to_hex(p.bytes));
    } else {
      ++neg[validate(spec, p.bytes).outcome.failure().reason];
    }
  }
  require(pos >= 2, "fewer than 2 positives");
  for (auto c : {FailureReason::kConstraintViolated, FailureReason::kInsufficientInput, FailureReason::kTrailingBytes}) {
    require(neg[c] >= 2, "fewer than 2 negatives of class " + std::string(to_string(c)));
  }
  std::filesystem::remove_all(dir);
  std::ostringstream os;
  os << corpus.size() << " packets, " << pos << " positive; negatives constraint=" << neg[FailureReason::kConstraintViolated]
     << " truncated=" << neg[FailureReason::kInsufficientInput] << " trailing=" << neg[FailureReason::kTrailingBytes]
     << "; all labels confirmed";
  return os.str();
}

std::string criterion3() {
  auto dir = testing::fresh_temp_dir("acc3");
  auto r = run_cli({"gen", path("option.3d"), "--depth", "2", "--polarity", "positive", "--out", dir.string()});
  require(exit_of(r) == 0, "gen exit " + std::to_string(r.status.code) + ": " + r.err);
  const Spec spec = load_spec("option.3d");
  const auto corpus = read_corpus(dir);
  require_labels(spec, corpus, AcceptMode::kStrict);
  std::set<int> kinds;
  bool mss = false;
  for (const auto& p : corpus) {
    require(p.label == Label::kPositive, "negative packet in positive run");
    kinds.insert(p.bytes.at(0));
    if (p.bytes[0] == 2 && p.bytes.size() == 4) {
      auto v = validate(spec, p.bytes).outcome;
      const BigInt* m = v.binding("payload.case2.MaxSegSize");
      mss = mss || (m && *m == BigInt(p.bytes[2]) * 256 + p.bytes[3]);
    }
  }
  require(kinds == std::set<int>{0, 1, 2}, "Kind values not exactly {0,1,2}");
  require(mss, "no 4-byte Kind=2 packet with big-endian MaxSegSize");
  for (const auto& b : read_coverage(dir)["branches"]) {
    if (b["kind"] != "casetype") continue;
    auto hits = b["hits"].get<std::vector<int>>();
    for (int o = 0; o < 3; ++o) require(hits.at(static_cast<std::size_t>(o)) > 0, "dispatch outcome not hit");
  }
  std::filesystem::remove_all(dir);
  return std::to_string(corpus.size()) + " positives covering Kind 0, 1, 2; MaxSegSize big-endian";
}

std::string criterion4() {
  for (const char* other : {"message.3d", "message_renamed.3d"}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_cli({"equiv", path("message.3d"), path(other)});
    const auto dt = std::chrono::steady_clock::now() - t0;
    require(exit_of(r) == 0 && r.out.rfind("Equivalent", 0) == 0, std::string("not Equivalent vs ") + other);
    require(dt < std::chrono::seconds(10), std::string("equiv vs ") + other + " over 10 s");
  }
  return "Equivalent vs itself and vs the renamed copy";
}

std::string criterion5() {
  auto dir = testing::fresh_temp_dir("acc5");
  auto r = run_cli({"equiv", path("message_noconstraint.3d"), path("message.3d"), "--out", dir.string()});
  const int code = exit_of(r);
  require(code == 10 && r.out.rfind("LeftPermissive", 0) == 0, "expected LeftPermissive, got: " + r.out);
  const Spec loose = load_spec("message_noconstraint.3d");
  const Spec strict = load_spec("message.3d");
  const auto ws = read_corpus(dir);
  require(!ws.empty(), "no witness written");
  for (const auto& w : ws) {
    require(w.bytes.at(0) <= 0x2A, "witness first byte above 0x2A");
    require(validate(loose, w.bytes).accepted && !validate(strict, w.bytes).accepted,
            "witness " + to_hex(w.bytes) + " does not separate the specs");
  }
  std::filesystem::remove_all(dir);
  return "LeftPermissive with " + std::to_string(ws.size()) + " witness(es), first byte <= 0x2A";
}

std::string criterion6() {
  // Lengths 0-3 give 85 strings and lengths 1-4 give 340; lengths 0-4 cover
  // both counts and reach the 4-byte OPTION packets.
  const auto inputs = testing::all_inputs(4);
  require(inputs.size() == 341, "input grid is not 341 strings");
  int checked = 0;
  for (const char* name : {"message.3d", "option.3d"}) {
    const Spec spec = load_spec(name);
    const FirstOrderProgram prog = instrument(specialize(spec), InstrumentPolicy::kNone);
    std::vector<SmtScript> scripts;
    for (const Bytes& b : inputs) {
      QuerySpec q;
      q.fixed_input = b;
      scripts.push_back(build_query(q, prog));
    }
    const auto results = solve_all(scripts, testing::solver_config());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto& v = results[i].verdict;
      require(v.sat() || v.unsat(), std::string(name) + " " + to_hex(inputs[i]) + ": " + v.describe());
      require(v.sat() == validate(spec, inputs[i]).accepted,
              std::string(name) + " disagrees with the interpreter on " + to_hex(inputs[i]));
      ++checked;
    }
  }
  return std::to_string(checked) + "/682 agree (lengths 0-4)";
}

std::string criterion7() {
  auto dir = testing::fresh_temp_dir("acc7");
  auto r = run_cli({"gen", path("always_fail.3d"), "--out", dir.string()});
  require(exit_of(r) == 0, "gen exit " + std::to_string(r.status.code));
  const auto cov = read_coverage(dir);
  require(cov["root_positive_unsat"].get<bool>(), "root positive query not reported unsat");
  require(r.out.find("always fails") != std::string::npos, "no always-fails warning");
  for (const auto& p : read_corpus(dir)) require(p.label == Label::kNegative, "positive packet emitted");
  std::filesystem::remove_all(dir);
  return "root positive query unsat, empty positive corpus";
}

std::string criterion8() {
  auto dir = testing::fresh_temp_dir("acc8");
  auto r = run_cli({"refine", "--candidates", path("candidates"), "--labeler-spec", path("udp.3d"), "--out",
                    dir.string()});
  require(exit_of(r) == 0, "refine exit " + std::to_string(r.status.code) + ": " + r.err);
  std::vector<std::string> survivors;
  for (const auto& e : std::filesystem::directory_iterator(dir / "survivors")) {
    survivors.push_back(e.path().stem().string());
  }
  require(survivors == std::vector<std::string>{"a_correct"}, "survivors are not exactly a_correct");
  std::map<std::string, int> failing;
  std::istringstream log(read_text_file(dir / "state-log.jsonl"));
  for (std::string line; std::getline(log, line);) {
    auto j = nlohmann::json::parse(line);
    if (j["kind"] == "failing-test") ++failing[j["candidate"].get<std::string>()];
  }
  require(failing == (std::map<std::string, int>{{"b_under", 1}, {"c_over", 1}}),
          "state log does not hold one failing-test record per pruned candidate");
  // Postcondition, checked on the written output.
  const Spec survivor = testing::spec_from_text(read_text_file(dir / "survivors" / "a_correct.3d"));
  const auto labelled = read_manifest(dir / "manifest.json");
  require(!labelled.empty(), "no labelled packets");
  require_labels(survivor, labelled, AcceptMode::kStrict);
  std::filesystem::remove_all(dir);
  return "a_correct survives; 1 failing-test record each for b_under, c_over; postcondition holds on " +
         std::to_string(labelled.size()) + " packets";
}

std::string criterion9() {
  auto dir = testing::fresh_temp_dir("acc9");
  auto r = run_cli({"--timeout-secs", "0.001", "gen", path("option.3d"), "--out", dir.string()});
  require(exit_of(r) == 20, "exit " + std::to_string(r.status.code) + ", expected 20: " + r.err);
  const auto cov = read_coverage(dir);
  require(cov["incomplete"].get<bool>(), "coverage not flagged incomplete");
  require(cov["unknowns"].get<int>() > 0, "no Unknown verdicts recorded");
  require(r.out.find("warning: corpus incomplete") != std::string::npos, "no incompleteness warning");
  const auto corpus = read_corpus(dir);
  require_labels(load_spec("option.3d"), corpus, AcceptMode::kStrict);
  std::filesystem::remove_all(dir);
  return "exit 20, " + std::to_string(cov["unknowns"].get<int>()) + " Unknown verdicts, partial corpus of " +
         std::to_string(corpus.size()) + " verified packets";
}

std::string criterion10() {
  std::string text = "typedef struct _CHAIN {\n";
  for (int i = 0; i < 100; ++i) text += "  UINT8 f" + std::to_string(i) + " { f" + std::to_string(i) + " >= 0 };\n";
  text += "} CHAIN;\n";
  const Spec spec = testing::spec_from_text(text);
  const FirstOrderProgram prog = specialize(spec);
  require(prog.branch_points.size() == 100, "expected 100 branch points");
  QuerySpec q;
  q.instrumented = true;
  q.min_branch_depth = 100;
  SolveResult r = solve(build_query(q, prog), testing::solver_config());
  require(r.verdict.sat() && r.packet, "positive query not sat: " + r.verdict.describe());
  require(validate(spec, *r.packet).accepted, "model rejected by the interpreter");
  require(replay(prog, *r.packet).trace.size() == 100, "model does not pass all 100 branches");
  return "100 branch points; instrumented positive query sat with a " + std::to_string(r.packet->size()) +
         "-byte packet";
}

struct Criterion {
  int number;
  std::string title;
  std::chrono::seconds limit;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "golden SMT fragments", std::chrono::seconds(1), criterion1},
      {2, "message-spec corpus", std::chrono::seconds(30), criterion2},
      {3, "casetype coverage", std::chrono::seconds(60), criterion3},
      {4, "equivalence reflexivity/alpha", std::chrono::seconds(20), criterion4},
      {5, "directed diff with witness", std::chrono::seconds(10), criterion5},
      {6, "brute-force oracle equivalence", std::chrono::seconds(300), criterion6},
      {7, "always-fail detection", std::chrono::seconds(5), criterion7},
      {8, "refine-loop convergence", std::chrono::seconds(120), criterion8},
      {9, "robustness under 1 ms timeout", std::chrono::seconds(10), criterion9},
      {10, "scale smoke (100 branches)", std::chrono::seconds(300), criterion10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      detail = c.run();
      ok = true;
    } catch (const std::exception& e) {
      detail = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && secs > static_cast<double>(c.limit.count())) {
      ok = false;
      detail += " (exceeded " + std::to_string(c.limit.count()) + " s limit)";
    }
    failures += !ok;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(2);
    line << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.number << ": " << c.title << " (" << secs << " s) - "
         << detail;
    std::cout << line.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
