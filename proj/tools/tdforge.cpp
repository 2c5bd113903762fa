// tdforge: check, run, generate tests for, and compare binary format specs.
//
// Exit codes: 0 success / accepted / equivalent, 1 rejected or diagnostics,
// 2 usage error, 3 I/O or external process failure, 10/11/12 diff verdicts,
// 20 solver inconclusive.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "tdforge/corpus.hpp"
#include "tdforge/diffcheck.hpp"
#include "tdforge/frontend.hpp"
#include "tdforge/hash.hpp"
#include "tdforge/program.hpp"
#include "tdforge/refine.hpp"
#include "tdforge/smt.hpp"
#include "tdforge/solver.hpp"
#include "tdforge/testgen.hpp"

namespace fs = std::filesystem;
using namespace tdforge;

namespace {

constexpr char kVersion[] = "tdforge 0.1.0 (grammar subset v1: structs, casetypes, enums, bitfields, byte arrays)";

constexpr int kExitRejected = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInconclusive = 20;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Diagnostics were already printed.
struct SpecRejected : std::runtime_error {
  SpecRejected() : std::runtime_error("spec rejected") {}
};

struct Globals {
  std::string mode = "strict";
  std::optional<std::string> solver;
  double timeout_secs = 30.0;
  std::string seed_note;
  std::optional<std::string> entry;

  AcceptMode accept_mode() const { return mode == "prefix" ? AcceptMode::kPrefix : AcceptMode::kStrict; }

  SolverConfig solver_config() const {
    SolverConfig cfg;
    cfg.command = resolve_solver_command(solver);
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_secs * 1000.0));
    if (cfg.timeout.count() < 1) cfg.timeout = std::chrono::milliseconds(1);
    return cfg;
  }
};

std::string load_text(const std::string& path) {
  try {
    return read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

Spec load_spec(const std::string& path, const Globals& g) {
  std::string text = load_text(path);
  ParseResult r = check(text, g.entry);
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&r)) {
    for (const auto& d : *diags) std::cerr << format_diagnostic(d, path) << "\n";
    throw SpecRejected();
  }
  return std::get<Spec>(std::move(r));
}

void print_packets(const std::vector<TestPacket>& packets) {
  for (const auto& p : packets) {
    std::cout << "  " << to_string(p.label) << " " << p.id << " [" << to_spaced_hex(p.bytes) << "] "
              << p.query_kind << "\n";
  }
}

void stamp_note(std::vector<TestPacket>& packets, const std::string& note) {
  for (auto& p : packets) p.note = note;
}

// --- check -----------------------------------------------------------------

int cmd_check(const std::string& file, bool json, const Globals& g) {
  std::string text = load_text(file);
  ParseResult r = check(text, g.entry);
  const auto* diags = std::get_if<std::vector<Diagnostic>>(&r);
  if (json) {
    std::cout << diagnostics_to_json(diags ? *diags : std::vector<Diagnostic>{}, file) << "\n";
  } else if (diags) {
    for (const auto& d : *diags) std::cerr << format_diagnostic(d, file) << "\n";
  } else {
    const Spec& s = std::get<Spec>(r);
    std::cout << file << ": ok (" << s.defs().size() << " definitions, entry " << s.entry() << ")\n";
  }
  return diags ? kExitRejected : 0;
}

// --- run -------------------------------------------------------------------

int cmd_run(const std::string& file, const std::string& packet_file, const std::string& hex, bool show_trace,
            const Globals& g) {
  Spec spec = load_spec(file, g);
  Bytes packet;
  if (!hex.empty()) {
    try {
      packet = from_hex(hex);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: --hex: " << e.what() << "\n";
      return kExitUsage;
    }
  } else {
    try {
      packet = read_file_bytes(packet_file);
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
  }
  Validation v = validate(spec, packet, g.accept_mode());
  std::cout << (v.accepted ? "accepted" : "rejected") << ": " << describe(v.outcome) << "\n";
  if (show_trace) {
    ReplayResult r = replay(specialize(spec), packet, g.accept_mode());
    std::cout << "trace:";
    for (std::size_t i = 0; i < r.trace.size(); ++i) std::cout << " b" << r.visited[i] << "=" << r.trace[i];
    std::cout << "\n";
  }
  return v.accepted ? 0 : kExitRejected;
}

// --- gen -------------------------------------------------------------------

struct GenArgs {
  std::string file;
  int depth = 100;
  int quota = 2;
  int max = 200;
  std::string out;
  std::string polarity = "both";
  int unknown_budget = 10;
  unsigned workers = 0;
};

int cmd_gen(const GenArgs& a, const Globals& g) {
  const std::string text = load_text(a.file);
  Spec spec = load_spec(a.file, g);
  GenConfig cfg;
  cfg.branch_depth = a.depth;
  cfg.quota = a.quota;
  cfg.max_tests = a.max;
  cfg.mode = g.accept_mode();
  cfg.polarity = a.polarity == "positive" ? Polarity::kPositive
                 : a.polarity == "negative" ? Polarity::kNegative
                                            : Polarity::kBoth;
  cfg.unknown_budget = a.unknown_budget;
  cfg.workers = a.workers;
  cfg.solver = g.solver_config();

  GenResult r = gen_tests(spec, cfg);
  stamp_note(r.corpus, g.seed_note);
  std::vector<TestPacket> written = stable_sorted(r.corpus);
  if (!a.out.empty()) {
    try {
      written = write_corpus(a.out, r.corpus, sha256_hex(text));
      write_text_file(fs::path(a.out) / "coverage.json", r.report.to_json());
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
  }
  int pos = 0;
  for (const auto& p : written) pos += p.label == Label::kPositive;
  std::cout << "generated " << written.size() << " packets (" << pos << " positive, " << written.size() - pos
            << " negative)\n";
  print_packets(written);
  std::cout << r.report.summary();
  return r.report.incomplete ? kExitInconclusive : 0;
}

// --- diff / equiv ----------------------------------------------------------

void write_witnesses(const std::string& out, std::vector<TestPacket> packets, const std::string& note) {
  if (out.empty()) return;
  stamp_note(packets, note);
  try {
    write_corpus(out, std::move(packets), "");
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

int cmd_diff(const std::string& a, const std::string& b, int max_witnesses, const std::string& out,
             const Globals& g) {
  Spec left = load_spec(a, g);
  Spec right = load_spec(b, g);
  DiffConfig cfg{g.accept_mode(), max_witnesses, g.solver_config()};
  DirectionResult r = diff_one_direction(left, right, cfg);
  if (r.status == VerdictKind::kUnknown) {
    std::cout << "inconclusive: " << r.last.describe() << "\n";
    return kExitInconclusive;
  }
  if (r.witnesses.empty()) {
    std::cout << "no packet is accepted by " << a << " and rejected by " << b << " (unsat)\n";
    return 0;
  }
  std::cout << r.witnesses.size() << " witness(es) accepted by " << a << " and rejected by " << b << "\n";
  for (const auto& w : r.witnesses) std::cout << localization_report(left, right, w.bytes, cfg.mode);
  write_witnesses(out, r.witnesses, g.seed_note);
  return 10;
}

int cmd_equiv(const std::string& a, const std::string& b, int max_witnesses, const std::string& out,
              const Globals& g) {
  Spec left = load_spec(a, g);
  Spec right = load_spec(b, g);
  DiffConfig cfg{g.accept_mode(), max_witnesses, g.solver_config()};
  DiffResult r = equiv(left, right, cfg);
  std::cout << to_string(r.kind) << "\n";
  if (r.kind == DiffKind::kInconclusive) {
    std::cout << "  left-not-right: " << r.verdicts.first.describe() << "\n";
    std::cout << "  right-not-left: " << r.verdicts.second.describe() << "\n";
  }
  for (const auto& w : r.left_witnesses) {
    std::cout << "accepted only by " << a << ":\n" << localization_report(left, right, w.bytes, cfg.mode);
  }
  for (const auto& w : r.right_witnesses) {
    std::cout << "accepted only by " << b << ":\n" << localization_report(left, right, w.bytes, cfg.mode);
  }
  std::vector<TestPacket> all = r.left_witnesses;
  all.insert(all.end(), r.right_witnesses.begin(), r.right_witnesses.end());
  write_witnesses(out, std::move(all), g.seed_note);
  return exit_code(r.kind);
}

// --- refine ----------------------------------------------------------------

struct RefineArgs {
  std::string candidates;
  std::string provider_cmd;
  std::string labeler_spec;
  std::string labeler_cmd;
  std::string seeds;
  int max_rounds = 15;
  std::string out;
  double command_timeout_secs = 60.0;
};

int cmd_refine(const RefineArgs& a, const Globals& g) {
  if (a.candidates.empty() == a.provider_cmd.empty()) {
    std::cerr << "error: give exactly one of --candidates and --provider-cmd\n";
    return kExitUsage;
  }
  if (a.labeler_spec.empty() == a.labeler_cmd.empty()) {
    std::cerr << "error: give exactly one of --labeler-spec and --labeler-cmd\n";
    return kExitUsage;
  }
  const auto cmd_timeout = std::chrono::milliseconds(static_cast<long long>(a.command_timeout_secs * 1000));
  std::unique_ptr<CandidateProvider> provider;
  try {
    if (!a.candidates.empty()) {
      provider = std::make_unique<DirectoryProvider>(a.candidates);
    } else {
      provider = std::make_unique<CommandProvider>(a.provider_cmd, cmd_timeout);
    }
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  std::unique_ptr<Labeler> labeler;
  if (!a.labeler_spec.empty()) {
    labeler = std::make_unique<GoldenSpecLabeler>(load_spec(a.labeler_spec, Globals{g.mode, {}, 0, "", {}}),
                                                  g.accept_mode());
  } else {
    labeler = std::make_unique<CommandLabeler>(a.labeler_cmd, cmd_timeout);
  }
  std::vector<Bytes> seeds_pos;
  std::vector<Bytes> seeds_neg;
  if (!a.seeds.empty()) {
    std::vector<TestPacket> seeds;
    try {
      seeds = read_manifest(a.seeds);
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
    for (auto& s : seeds) (s.label == Label::kPositive ? seeds_pos : seeds_neg).push_back(std::move(s.bytes));
  }

  LoopConfig cfg;
  cfg.max_rounds = a.max_rounds;
  cfg.mode = g.accept_mode();
  cfg.entry = g.entry;
  cfg.gen.solver = g.solver_config();
  cfg.diff.solver = g.solver_config();

  LoopResult r;
  int code = 0;
  try {
    r = run_loop(*provider, *labeler, seeds_pos, seeds_neg, cfg);
  } catch (const RefineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    r = e.partial;
    code = kExitIo;
  }
  if (!a.out.empty()) {
    try {
      write_loop_output(a.out, r);
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
  }
  std::cout << "rounds: " << r.rounds << (r.budget_hit ? " (max-rounds reached)" : "") << "\n";
  std::cout << "positives: " << r.positives.size() << ", negatives: " << r.negatives.size() << "\n";
  std::cout << "survivors:";
  for (const auto& c : r.survivors) std::cout << " " << c.name;
  std::cout << (r.survivors.empty() ? " (none)\n" : "\n");
  std::cout << r.log_jsonl();
  if (code != 0) return code;
  return r.survivors.empty() ? kExitRejected : 0;
}

// --- dump-smt --------------------------------------------------------------

struct DumpArgs {
  std::string file;
  std::string query = "positive";
  std::string against;
  bool instrumented = false;
  std::string prefix;
  int depth = 0;
  bool ir = false;
};

int cmd_dump(const DumpArgs& a, const Globals& g) {
  Spec spec = load_spec(a.file, g);
  FirstOrderProgram prog = specialize(spec);
  if (a.ir) {
    std::cout << dump(prog);
    return 0;
  }
  QuerySpec q;
  q.mode = g.accept_mode();
  q.instrumented = a.instrumented || !a.prefix.empty() || a.depth > 0;
  q.min_branch_depth = a.depth;
  std::stringstream ss(a.prefix);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      q.trace_prefix.push_back(std::stoi(item));
    } catch (const std::exception&) {
      std::cerr << "error: --prefix expects comma-separated integers\n";
      return kExitUsage;
    }
  }
  std::optional<FirstOrderProgram> other;
  if (a.query == "positive") {
    q.kind = QueryKind::kPositive;
  } else if (a.query.rfind("negative", 0) == 0) {
    q.kind = QueryKind::kNegative;
    if (a.query == "negative:truncated") q.negative_class = NegativeClass::kTruncated;
    if (a.query == "negative:rejected") q.negative_class = NegativeClass::kRejected;
    if (a.query == "negative:trailing") q.negative_class = NegativeClass::kTrailing;
  } else {
    if (a.against.empty()) {
      std::cerr << "error: --query diff needs --against FILE\n";
      return kExitUsage;
    }
    q.kind = QueryKind::kDiffLeftNotRight;
    other = specialize(load_spec(a.against, g));
  }
  std::cout << build_query(q, prog, other ? &*other : nullptr).render();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Check, execute, test-generate and compare binary format specifications"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--mode", g.mode, "Acceptance mode")->check(CLI::IsMember({"strict", "prefix"}))->capture_default_str();
  app.add_option("--solver", g.solver, "Solver command line (default: $TDFORGE_SOLVER or \"z3 -in\")");
  app.add_option("--timeout-secs", g.timeout_secs, "Per-query solver timeout")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed-note", g.seed_note, "Provenance note recorded in manifests");
  app.add_option("--entry", g.entry, "Entry type (default: last typedef)");

  std::function<int()> action;

  auto* check_cmd = app.add_subcommand("check", "Parse and typecheck a spec (exit 0 ok, 1 diagnostics)");
  std::string check_file;
  bool check_json = false;
  check_cmd->add_option("file", check_file)->required();
  check_cmd->add_flag("--json", check_json, "Print diagnostics as JSON");
  check_cmd->callback([&] { action = [&] { return cmd_check(check_file, check_json, g); }; });

  auto* run_cmd = app.add_subcommand("run", "Validate one packet (exit 0 accepted, 1 rejected)");
  std::string run_file, run_packet, run_hex;
  bool run_trace = false;
  run_cmd->add_option("file", run_file)->required();
  auto* packet_opt = run_cmd->add_option("packet", run_packet, "Packet file");
  run_cmd->add_option("--hex", run_hex, "Packet as hex digits")->excludes(packet_opt);
  run_cmd->add_flag("--trace", run_trace, "Print the branch trace");
  run_cmd->callback([&] {
    if (run_packet.empty() && run_hex.empty()) throw CLI::RequiredError("packet or --hex");
    action = [&] { return cmd_run(run_file, run_packet, run_hex, run_trace, g); };
  });

  auto* gen_cmd = app.add_subcommand("gen", "Generate a branch-covering test corpus (exit 20 if incomplete)");
  GenArgs gen;
  gen_cmd->add_option("file", gen.file)->required();
  gen_cmd->add_option("--depth", gen.depth, "Maximum branch trace length")->check(CLI::NonNegativeNumber)->capture_default_str();
  gen_cmd->add_option("--quota", gen.quota, "Models per query")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--max", gen.max, "Maximum corpus size")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Corpus directory");
  gen_cmd->add_option("--polarity", gen.polarity)->check(CLI::IsMember({"both", "positive", "negative"}))->capture_default_str();
  gen_cmd->add_option("--unknown-budget", gen.unknown_budget)->check(CLI::NonNegativeNumber)->capture_default_str();
  gen_cmd->add_option("--jobs", gen.workers, "Concurrent solver processes (0 = CPU count)")->capture_default_str();
  gen_cmd->callback([&] { action = [&] { return cmd_gen(gen, g); }; });

  std::string diff_a, diff_b, diff_out;
  int diff_max = 5;
  auto* diff_cmd = app.add_subcommand("diff", "Find packets accepted by A and rejected by B (exit 0 none, 10 found, 20 inconclusive)");
  diff_cmd->add_option("a", diff_a)->required();
  diff_cmd->add_option("b", diff_b)->required();
  diff_cmd->add_option("--max-witnesses", diff_max)->check(CLI::PositiveNumber)->capture_default_str();
  diff_cmd->add_option("--out", diff_out, "Write witnesses as a corpus");
  diff_cmd->callback([&] { action = [&] { return cmd_diff(diff_a, diff_b, diff_max, diff_out, g); }; });

  auto* equiv_cmd = app.add_subcommand(
      "equiv", "Compare two specs (exit 0 equivalent, 10 left permissive, 11 right permissive, 12 incomparable, 20 inconclusive)");
  equiv_cmd->add_option("a", diff_a)->required();
  equiv_cmd->add_option("b", diff_b)->required();
  equiv_cmd->add_option("--max-witnesses", diff_max)->check(CLI::PositiveNumber)->capture_default_str();
  equiv_cmd->add_option("--out", diff_out, "Write witnesses as a corpus");
  equiv_cmd->callback([&] { action = [&] { return cmd_equiv(diff_a, diff_b, diff_max, diff_out, g); }; });

  auto* refine_cmd = app.add_subcommand("refine", "Run the candidate refinement loop (exit 0 survivors, 1 none, 3 failure)");
  RefineArgs ref;
  refine_cmd->add_option("--candidates", ref.candidates, "Directory of .3d candidates");
  refine_cmd->add_option("--provider-cmd", ref.provider_cmd, "Command producing one candidate per call");
  refine_cmd->add_option("--labeler-spec", ref.labeler_spec, "Trusted spec used as the labeler");
  refine_cmd->add_option("--labeler-cmd", ref.labeler_cmd, "Command labelling a packet on stdin (exit 0 = positive)");
  refine_cmd->add_option("--seeds", ref.seeds, "Seed manifest");
  refine_cmd->add_option("--max-rounds", ref.max_rounds)->check(CLI::PositiveNumber)->capture_default_str();
  refine_cmd->add_option("--out", ref.out, "Output directory");
  refine_cmd->add_option("--command-timeout-secs", ref.command_timeout_secs)->check(CLI::PositiveNumber)->capture_default_str();
  refine_cmd->callback([&] { action = [&] { return cmd_refine(ref, g); }; });

  auto* dump_cmd = app.add_subcommand("dump-smt", "Print the SMT-LIB2 query for a spec");
  DumpArgs dump_args;
  dump_cmd->add_option("file", dump_args.file)->required();
  dump_cmd->add_option("--query", dump_args.query)
      ->check(CLI::IsMember({"positive", "negative", "negative:truncated", "negative:rejected", "negative:trailing", "diff"}))
      ->capture_default_str();
  dump_cmd->add_option("--against", dump_args.against, "Second spec for --query diff");
  dump_cmd->add_flag("--instrumented", dump_args.instrumented, "Encode branch tags");
  dump_cmd->add_option("--prefix", dump_args.prefix, "Branch trace prefix, e.g. 0,2");
  dump_cmd->add_option("--depth", dump_args.depth, "Minimum branch depth")->check(CLI::NonNegativeNumber);
  dump_cmd->add_flag("--ir", dump_args.ir, "Print the lowered program instead");
  dump_cmd->callback([&] { action = [&] { return cmd_dump(dump_args, g); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return action();
  } catch (const SpecRejected&) {
    return kExitRejected;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const EncoderBug& e) {
    std::cerr << "internal error (encoder bug): " << e.what() << "\n";
    return 70;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
