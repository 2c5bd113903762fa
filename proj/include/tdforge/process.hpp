#pragma once

// Child processes with pipes on stdin/stdout/stderr, deadline-bounded I/O,
// and guaranteed reaping.

#include <chrono>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace tdforge {

using Clock = std::chrono::steady_clock;

/// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

struct ExitStatus {
  bool exited = false;     // normal exit with `code`
  int code = 0;
  bool signaled = false;   // killed by `signal`
  int signal = 0;

  std::string describe() const;
};

class Subprocess {
 public:
  /// Starts `argv`. A child whose exec fails exits with status 127.
  explicit Subprocess(const std::vector<std::string>& argv);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  /// False if the deadline passed or the child closed its input first.
  bool write_all(const std::string& data, Clock::time_point deadline);
  void close_stdin();

  enum class ReadStatus { kLine, kEof, kTimeout };
  /// Next stdout line without its terminator.
  ReadStatus read_line(std::string& line, Clock::time_point deadline);
  /// Everything until stdout closes.
  ReadStatus read_all(std::string& out, Clock::time_point deadline);

  /// Waits for exit; kills the child if the deadline passes first.
  std::optional<ExitStatus> wait(Clock::time_point deadline);
  /// SIGKILL and reap.
  void kill();

  const std::string& stderr_text() const { return err_; }

 private:
  bool pump(Clock::time_point deadline, bool want_stdout);

  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  int err_fd_ = -1;
  std::string out_buf_;
  std::string err_;
  bool out_eof_ = false;
  std::optional<ExitStatus> status_;
};

struct CommandResult {
  bool timed_out = false;
  ExitStatus status;
  std::string out;
  std::string err;
};

/// Runs `argv` with `input` on stdin and collects its output.
CommandResult run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout);

/// Runs a command line through `/bin/sh -c`.
CommandResult run_shell(const std::string& command, const std::string& input,
                        std::chrono::milliseconds timeout);

}  // namespace tdforge
