#include "tdforge/refine.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "tdforge/frontend.hpp"
#include "tdforge/hash.hpp"
#include "tdforge/process.hpp"

namespace tdforge {

using ordered_json = nlohmann::ordered_json;

DirectoryProvider::DirectoryProvider(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".3d") files_.push_back(e.path());
  }
  std::sort(files_.begin(), files_.end());
}

std::optional<Candidate> DirectoryProvider::next_candidate(const std::string&) {
  if (next_ == files_.size()) return std::nullopt;
  const auto& path = files_[next_++];
  return Candidate{path.stem().string(), read_text_file(path)};
}

CommandProvider::CommandProvider(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

std::optional<Candidate> CommandProvider::next_candidate(const std::string& state_log) {
  CommandResult r = run_shell(command_, state_log, timeout_);
  if (r.timed_out) throw ProviderFailure("provider command timed out");
  if (!r.status.exited || r.status.code != 0) {
    throw ProviderFailure("provider command failed (" + r.status.describe() + "): " + r.err);
  }
  if (r.out.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  return Candidate{"candidate-" + std::to_string(++count_), r.out};
}

Label GoldenSpecLabeler::label(const Bytes& packet) {
  return validate(spec_, packet, mode_).accepted ? Label::kPositive : Label::kNegative;
}

CommandLabeler::CommandLabeler(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

Label CommandLabeler::label(const Bytes& packet) {
  CommandResult r = run_shell(command_, std::string(packet.begin(), packet.end()), timeout_);
  if (r.timed_out) throw LabelerFailure("labeler timed out on " + to_hex(packet));
  if (!r.status.exited || r.status.code == 126 || r.status.code == 127) {
    throw LabelerFailure("labeler failed on " + to_hex(packet) + " (" + r.status.describe() + ")");
  }
  return r.status.code == 0 ? Label::kPositive : Label::kNegative;
}

LoopConfig::LoopConfig() {
  gen.branch_depth = 4;
  gen.quota = 2;
  gen.max_tests = 40;
}

std::string LogRecord::to_json_line() const {
  ordered_json j;
  switch (kind) {
    case Kind::kSyntaxError: {
      j["kind"] = "syntax-error";
      j["candidate"] = candidate;
      ordered_json ds = ordered_json::array();
      for (const auto& d : diagnostics) {
        ds.push_back({{"code", d.code},
                      {"message", d.message},
                      {"line", d.span.begin.line},
                      {"column", d.span.begin.column}});
      }
      j["diagnostics"] = std::move(ds);
      break;
    }
    case Kind::kFailingTest:
      j["kind"] = "failing-test";
      j["candidate"] = candidate;
      j["packet"] = to_hex(packet);
      j["expected"] = to_string(expected);
      j["got"] = got;
      break;
    case Kind::kLabelerWarning:
      j["kind"] = "labeler-warning";
      j["packet"] = to_hex(packet);
      j["message"] = message;
      break;
  }
  return j.dump();
}

std::string LoopResult::log_jsonl() const {
  std::string s;
  for (const auto& r : log) s += r.to_json_line() + "\n";
  return s;
}

LabelAdditions label_inputs(const std::vector<Bytes>& packets, Labeler& labeler,
                            const std::vector<Bytes>& known_positive, const std::vector<Bytes>& known_negative) {
  std::set<Bytes> known(known_positive.begin(), known_positive.end());
  known.insert(known_negative.begin(), known_negative.end());
  LabelAdditions out;
  for (const Bytes& p : packets) {
    if (!known.insert(p).second) continue;
    try {
      (labeler.label(p) == Label::kPositive ? out.positives : out.negatives).push_back(p);
    } catch (const LabelerFailure& e) {
      LogRecord w;
      w.kind = LogRecord::Kind::kLabelerWarning;
      w.packet = p;
      w.message = e.what();
      out.warnings.push_back(std::move(w));
    }
  }
  return out;
}

namespace {

class Loop {
 public:
  Loop(CandidateProvider& provider, Labeler& labeler, const LoopConfig& cfg)
      : provider_(provider), labeler_(labeler), cfg_(cfg) {}

  LoopResult run(const std::vector<Bytes>& seeds_positive, const std::vector<Bytes>& seeds_negative) {
    try {
      check_seeds(seeds_positive, Label::kPositive);
      check_seeds(seeds_negative, Label::kNegative);
    } catch (const LabelerFailure& e) {
      throw RefineError(std::string("labeler failed on a seed packet: ") + e.what(), res_);
    }
    add_unique(res_.positives, seeds_positive);
    add_unique(res_.negatives, seeds_negative);

    bool exhausted = false;
    while (res_.rounds < cfg_.max_rounds) {
      ++res_.rounds;
      if (!exhausted) exhausted = !generate();
      augment();
      prune();
      if (exhausted) return res_;
    }
    res_.budget_hit = !exhausted;
    return res_;
  }

 private:
  void check_seeds(const std::vector<Bytes>& seeds, Label expected) {
    for (const Bytes& s : seeds) {
      if (labeler_.label(s) != expected) {
        throw RefineError("seed packet " + to_hex(s) + " is labelled " + std::string(to_string(expected)) +
                              " but the labeler disagrees",
                          res_);
      }
    }
  }

  static void add_unique(std::vector<Bytes>& dst, const std::vector<Bytes>& src) {
    for (const Bytes& b : src) {
      if (std::find(dst.begin(), dst.end(), b) == dst.end()) dst.push_back(b);
    }
  }

  // Returns false when the provider is exhausted.
  bool generate() {
    std::optional<Candidate> c;
    try {
      c = provider_.next_candidate(res_.log_jsonl());
    } catch (const std::exception& e) {
      throw RefineError(std::string("candidate provider failed: ") + e.what(), res_);
    }
    if (!c) return false;
    if (!seen_texts_.insert(c->text).second) return true;
    ParseResult parsed = check(c->text, cfg_.entry);
    if (auto* diags = std::get_if<std::vector<Diagnostic>>(&parsed)) {
      LogRecord r;
      r.kind = LogRecord::Kind::kSyntaxError;
      r.candidate = c->name;
      r.diagnostics = *diags;
      res_.log.push_back(std::move(r));
      return true;
    }
    std::string name = c->name;
    for (int k = 2; std::any_of(res_.survivors.begin(), res_.survivors.end(),
                                [&](const auto& s) { return s.name == name; });
         ++k) {
      name = c->name + "-" + std::to_string(k);
    }
    res_.survivors.push_back({name, c->text, std::get<Spec>(std::move(parsed))});
    return true;
  }

  void augment() {
    std::vector<Bytes> fresh;
    GenConfig gen = cfg_.gen;
    gen.mode = cfg_.mode;
    for (const auto& c : res_.survivors) {
      if (!generated_.insert(c.name).second) continue;
      for (auto& p : gen_tests(c.spec, gen).corpus) fresh.push_back(std::move(p.bytes));
    }
    DiffConfig diff = cfg_.diff;
    diff.mode = cfg_.mode;
    for (std::size_t i = 0; i < res_.survivors.size(); ++i) {
      for (std::size_t j = 0; j < res_.survivors.size(); ++j) {
        if (i == j) continue;
        const auto& a = res_.survivors[i];
        const auto& b = res_.survivors[j];
        if (!diffed_.insert({a.name, b.name}).second) continue;
        for (auto& w : diff_one_direction(a.spec, b.spec, diff).witnesses) fresh.push_back(std::move(w.bytes));
      }
    }
    LabelAdditions add = label_inputs(fresh, labeler_, res_.positives, res_.negatives);
    add_unique(res_.positives, add.positives);
    add_unique(res_.negatives, add.negatives);
    for (auto& w : add.warnings) res_.log.push_back(std::move(w));
  }

  void prune() {
    std::vector<AdmittedCandidate> kept;
    for (auto& c : res_.survivors) {
      if (auto bad = first_inconsistency(c)) {
        res_.log.push_back(std::move(*bad));
      } else {
        kept.push_back(std::move(c));
      }
    }
    res_.survivors = std::move(kept);
  }

  std::optional<LogRecord> first_inconsistency(const AdmittedCandidate& c) const {
    auto probe = [&](const Bytes& p, Label expected) -> std::optional<LogRecord> {
      Validation v = validate(c.spec, p, cfg_.mode);
      if (v.accepted == (expected == Label::kPositive)) return std::nullopt;
      LogRecord r;
      r.kind = LogRecord::Kind::kFailingTest;
      r.candidate = c.name;
      r.packet = p;
      r.expected = expected;
      r.got = (v.accepted ? "accepted: " : "rejected: ") + describe(v.outcome);
      return r;
    };
    for (const Bytes& p : res_.positives) {
      if (auto r = probe(p, Label::kPositive)) return r;
    }
    for (const Bytes& p : res_.negatives) {
      if (auto r = probe(p, Label::kNegative)) return r;
    }
    return std::nullopt;
  }

  CandidateProvider& provider_;
  Labeler& labeler_;
  const LoopConfig& cfg_;
  LoopResult res_;
  std::set<std::string> seen_texts_;
  std::set<std::string> generated_;
  std::set<std::pair<std::string, std::string>> diffed_;
};

}  // namespace

LoopResult run_loop(CandidateProvider& provider, Labeler& labeler, const std::vector<Bytes>& seeds_positive,
                    const std::vector<Bytes>& seeds_negative, const LoopConfig& cfg) {
  return Loop(provider, labeler, cfg).run(seeds_positive, seeds_negative);
}

std::vector<std::string> postcondition_violations(const LoopResult& result, AcceptMode mode) {
  std::vector<std::string> out;
  for (const auto& c : result.survivors) {
    for (const Bytes& p : result.positives) {
      if (!validate(c.spec, p, mode).accepted) out.push_back(c.name + " rejects positive " + to_hex(p));
    }
    for (const Bytes& p : result.negatives) {
      if (validate(c.spec, p, mode).accepted) out.push_back(c.name + " accepts negative " + to_hex(p));
    }
  }
  return out;
}

void write_loop_output(const std::filesystem::path& dir, const LoopResult& result) {
  std::filesystem::create_directories(dir / "survivors");
  for (const auto& c : result.survivors) write_text_file(dir / "survivors" / (c.name + ".3d"), c.text);
  std::vector<TestPacket> packets;
  for (const Bytes& p : result.positives) packets.push_back(TestPacket::make(p, Label::kPositive, {}, "refine"));
  for (const Bytes& p : result.negatives) packets.push_back(TestPacket::make(p, Label::kNegative, {}, "refine"));
  write_text_file(dir / "manifest.json", manifest_json(packets, ""));
  write_text_file(dir / "state-log.jsonl", result.log_jsonl());
}

}  // namespace tdforge
