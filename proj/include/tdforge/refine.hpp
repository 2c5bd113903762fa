#pragma once

// Candidate refinement loop: admit candidate specs from a provider, grow the
// labeled packet sets with generated tests and diff witnesses, and prune
// candidates that disagree with a label.

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdforge/corpus.hpp"
#include "tdforge/diagnostics.hpp"
#include "tdforge/diffcheck.hpp"
#include "tdforge/testgen.hpp"

namespace tdforge {

struct Candidate {
  std::string name;
  std::string text;
};

class CandidateProvider {
 public:
  virtual ~CandidateProvider() = default;
  /// Next candidate, or nullopt when exhausted. `state_log` is the log so
  /// far as line-delimited JSON.
  virtual std::optional<Candidate> next_candidate(const std::string& state_log) = 0;
};

/// Yields the `.3d` files of a directory in file-name order.
class DirectoryProvider : public CandidateProvider {
 public:
  explicit DirectoryProvider(const std::filesystem::path& dir);
  std::optional<Candidate> next_candidate(const std::string& state_log) override;

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t next_ = 0;
};

/// Runs a shell command per request: the state log on stdin, a candidate on
/// stdout. Empty output means exhausted; a nonzero exit is a provider failure.
class CommandProvider : public CandidateProvider {
 public:
  CommandProvider(std::string command, std::chrono::milliseconds timeout);
  std::optional<Candidate> next_candidate(const std::string& state_log) override;

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  int count_ = 0;
};

class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual Label label(const Bytes& packet) = 0;
};

/// Labels with the interpreter on a trusted spec.
class GoldenSpecLabeler : public Labeler {
 public:
  GoldenSpecLabeler(Spec spec, AcceptMode mode) : spec_(std::move(spec)), mode_(mode) {}
  Label label(const Bytes& packet) override;

 private:
  Spec spec_;
  AcceptMode mode_;
};

/// Runs a shell command with the packet on stdin: exit 0 is positive, any
/// other exit is negative, except 126/127, signals and timeouts, which are
/// labeler failures.
class CommandLabeler : public Labeler {
 public:
  CommandLabeler(std::string command, std::chrono::milliseconds timeout);
  Label label(const Bytes& packet) override;

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

class ProviderFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LabelerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogRecord {
  enum class Kind { kSyntaxError, kFailingTest, kLabelerWarning };
  Kind kind = Kind::kSyntaxError;
  std::string candidate;
  std::vector<Diagnostic> diagnostics;   // kSyntaxError
  Bytes packet;                          // kFailingTest, kLabelerWarning
  Label expected = Label::kPositive;     // kFailingTest
  std::string got;                       // kFailingTest: outcome on the candidate
  std::string message;                   // kLabelerWarning

  std::string to_json_line() const;
};

struct AdmittedCandidate {
  std::string name;
  std::string text;
  Spec spec;
};

struct LoopConfig {
  int max_rounds = 15;
  AcceptMode mode = AcceptMode::kStrict;
  GenConfig gen;     // per-candidate test generation
  DiffConfig diff;   // pairwise witnesses
  std::optional<std::string> entry;

  LoopConfig();
};

struct LoopResult {
  std::vector<AdmittedCandidate> survivors;
  std::vector<Bytes> positives;
  std::vector<Bytes> negatives;
  std::vector<LogRecord> log;
  int rounds = 0;
  bool budget_hit = false;   // stopped at max_rounds before the provider was exhausted

  std::string log_jsonl() const;
};

/// A loop failure carrying the state reached so far.
class RefineError : public std::runtime_error {
 public:
  RefineError(const std::string& what, LoopResult partial)
      : std::runtime_error(what), partial(std::move(partial)) {}
  LoopResult partial;
};

struct LabelAdditions {
  std::vector<Bytes> positives;
  std::vector<Bytes> negatives;
  std::vector<LogRecord> warnings;
};

/// Partitions `packets` by the labeler, dropping packets already in either
/// set. A labeler failure skips the packet with a warning record.
LabelAdditions label_inputs(const std::vector<Bytes>& packets, Labeler& labeler,
                            const std::vector<Bytes>& known_positive, const std::vector<Bytes>& known_negative);

LoopResult run_loop(CandidateProvider& provider, Labeler& labeler, const std::vector<Bytes>& seeds_positive,
                    const std::vector<Bytes>& seeds_negative, const LoopConfig& cfg);

/// Every survivor accepts every positive and rejects every negative.
std::vector<std::string> postcondition_violations(const LoopResult& result, AcceptMode mode);

/// Writes `survivors/<name>.3d`, `manifest.json` and `state-log.jsonl`.
void write_loop_output(const std::filesystem::path& dir, const LoopResult& result);

}  // namespace tdforge
