#include "tdforge/solver.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace tdforge {

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kSat: return "sat";
    case VerdictKind::kUnsat: return "unsat";
    case VerdictKind::kUnknown: return "unknown";
    case VerdictKind::kCrash: return "crash";
  }
  return "?";
}

std::string SolverVerdict::describe() const {
  std::string s(to_string(kind));
  if (kind == VerdictKind::kUnknown) {
    s += reason == UnknownReason::kTimeout ? " (timeout)" : " (solver said unknown)";
  }
  if (kind == VerdictKind::kCrash) {
    if (exit) s += " (" + exit->describe() + ")";
    if (!detail.empty()) s += ": " + detail;
  }
  return s;
}

std::vector<std::string> resolve_solver_command(const std::optional<std::string>& flag) {
  std::string cmd = kDefaultSolverCommand;
  if (flag && !flag->empty()) {
    cmd = *flag;
  } else if (const char* env = std::getenv(kSolverEnvVar); env != nullptr && *env != '\0') {
    cmd = env;
  }
  auto argv = split_command(cmd);
  if (argv.empty()) throw std::invalid_argument("empty solver command");
  return argv;
}

namespace {

std::string tail(const std::string& s, std::size_t n = 400) {
  return s.size() <= n ? s : "..." + s.substr(s.size() - n);
}

SolverVerdict timeout_verdict(Subprocess& p, std::vector<std::string> transcript) {
  p.kill();
  SolverVerdict v;
  v.kind = VerdictKind::kUnknown;
  v.reason = UnknownReason::kTimeout;
  v.transcript = std::move(transcript);
  return v;
}

SolverVerdict crash_verdict(Subprocess& p, std::string detail, Clock::time_point deadline) {
  p.close_stdin();
  SolverVerdict v;
  v.kind = VerdictKind::kCrash;
  v.exit = p.wait(std::min(deadline, Clock::now() + std::chrono::seconds(2)));
  v.detail = detail.empty() ? tail(p.stderr_text()) : std::move(detail);
  return v;
}

bool is_error_line(const std::string& line) { return line.rfind("(error", 0) == 0; }

}  // namespace

SolverVerdict run_solver(const SmtScript& script, const SolverConfig& cfg) {
  const auto deadline = Clock::now() + cfg.timeout;
  Subprocess p(cfg.command);
  std::vector<std::string> transcript;

  if (!p.write_all(script.text, deadline)) {
    if (Clock::now() >= deadline) return timeout_verdict(p, {});
    return crash_verdict(p, "", deadline);
  }

  std::string line;
  for (;;) {
    auto st = p.read_line(line, deadline);
    if (st == Subprocess::ReadStatus::kTimeout) return timeout_verdict(p, {});
    if (st == Subprocess::ReadStatus::kEof) return crash_verdict(p, "", deadline);
    if (line.empty()) continue;
    if (is_error_line(line)) return crash_verdict(p, line, deadline);
    if (line == "sat" || line == "unsat" || line == "unknown") break;
    return crash_verdict(p, "unexpected solver output: " + line, deadline);
  }
  transcript.push_back(line);

  SolverVerdict v;
  v.kind = line == "sat" ? VerdictKind::kSat : line == "unsat" ? VerdictKind::kUnsat : VerdictKind::kUnknown;
  if (v.kind == VerdictKind::kUnknown) v.reason = UnknownReason::kSolverSaidUnknown;

  auto answer = [&](std::string& out) -> std::optional<SolverVerdict> {
    auto st = p.read_line(out, deadline);
    if (st == Subprocess::ReadStatus::kTimeout) return timeout_verdict(p, transcript);
    if (st == Subprocess::ReadStatus::kEof) return crash_verdict(p, "solver exited during model extraction", deadline);
    if (is_error_line(out)) return crash_verdict(p, out, deadline);
    return std::nullopt;
  };

  if (v.kind == VerdictKind::kSat) {
    if (!p.write_all(script.plan.size_command() + "\n", deadline)) return timeout_verdict(p, transcript);
    std::string size_line;
    if (auto bad = answer(size_line)) return *bad;
    transcript.push_back(size_line);
    std::size_t n = 0;
    try {
      BigInt size = parse_model_value(size_line);
      if (size >= 0 && size <= cfg.max_packet_size) n = size.convert_to<std::size_t>();
    } catch (const MalformedSolverOutput&) {
      // Left for parse_model to report with the full transcript.
    }
    std::string evals;
    for (std::size_t i = 0; i < n; ++i) evals += script.plan.byte_command(i) + "\n";
    if (!p.write_all(evals, deadline)) return timeout_verdict(p, transcript);
    for (std::size_t i = 0; i < n; ++i) {
      std::string b;
      if (auto bad = answer(b)) return *bad;
      transcript.push_back(b);
    }
  }

  p.write_all("(exit)\n", deadline);
  p.close_stdin();
  v.exit = p.wait(deadline);
  if (!v.exit) return timeout_verdict(p, transcript);
  v.transcript = std::move(transcript);
  v.detail = tail(p.stderr_text());
  return v;
}

SolveResult solve(const SmtScript& script, const SolverConfig& cfg) {
  SolveResult r{run_solver(script, cfg), std::nullopt};
  if (r.verdict.sat()) r.packet = parse_model(r.verdict.transcript, script.plan, cfg.max_packet_size);
  return r;
}

std::vector<SolveResult> solve_all(const std::vector<SmtScript>& scripts, const SolverConfig& cfg,
                                   unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, scripts.size())));
  std::vector<std::optional<SolveResult>> slots(scripts.size());
  std::vector<std::exception_ptr> errors(scripts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scripts.size(); i = next++) {
      try {
        slots[i] = solve(scripts[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<SolveResult> out;
  out.reserve(scripts.size());
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace tdforge
