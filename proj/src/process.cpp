#include "tdforge/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace tdforge {

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (char c : command) {
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_word) out.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote != 0) throw std::invalid_argument("unterminated quote in command: " + command);
  if (in_word) out.push_back(std::move(cur));
  return out;
}

std::string ExitStatus::describe() const {
  if (signaled) return "killed by signal " + std::to_string(signal);
  return "exit status " + std::to_string(code);
}

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

ExitStatus decode_status(int st) {
  ExitStatus s;
  if (WIFEXITED(st)) {
    s.exited = true;
    s.code = WEXITSTATUS(st);
  } else if (WIFSIGNALED(st)) {
    s.signaled = true;
    s.signal = WTERMSIG(st);
  }
  return s;
}

int millis_until(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  if (left <= 0) return 0;
  return left > 1000 ? 1000 : static_cast<int>(left);
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

Subprocess::Subprocess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw std::invalid_argument("empty command");
  ignore_sigpipe();
  int in[2], out[2], err[2];
  if (::pipe2(in, O_CLOEXEC) != 0 || ::pipe2(out, O_CLOEXEC) != 0 || ::pipe2(err, O_CLOEXEC) != 0) {
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in[0], 0);
    ::dup2(out[1], 1);
    ::dup2(err[1], 2);
    ::signal(SIGPIPE, SIG_DFL);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  ::close(err[1]);
  in_ = in[1];
  out_ = out[0];
  err_fd_ = err[0];
  set_nonblocking(in_);
  set_nonblocking(out_);
  set_nonblocking(err_fd_);
}

Subprocess::~Subprocess() {
  if (!status_) kill();
  close_fd(in_);
  close_fd(out_);
  close_fd(err_fd_);
}

// One poll round over stdout/stderr (and nothing else). Returns false on timeout.
bool Subprocess::pump(Clock::time_point deadline, bool want_stdout) {
  pollfd fds[2];
  int n = 0;
  if (want_stdout && out_ >= 0) fds[n++] = {out_, POLLIN, 0};
  if (err_fd_ >= 0) fds[n++] = {err_fd_, POLLIN, 0};
  if (n == 0) return true;
  int timeout = millis_until(deadline);
  if (timeout == 0 && Clock::now() >= deadline) return false;
  int r = ::poll(fds, static_cast<nfds_t>(n), timeout);
  if (r < 0 && errno != EINTR) throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
  char buf[4096];
  for (int i = 0; i < n && r > 0; ++i) {
    if ((fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
    ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
    if (got > 0) {
      (fds[i].fd == out_ ? out_buf_ : err_).append(buf, static_cast<std::size_t>(got));
    } else if (got == 0 || (errno != EAGAIN && errno != EINTR)) {
      if (fds[i].fd == out_) {
        out_eof_ = true;
        close_fd(out_);
      } else {
        close_fd(err_fd_);
      }
    }
  }
  return true;
}

bool Subprocess::write_all(const std::string& data, Clock::time_point deadline) {
  std::size_t done = 0;
  while (done < data.size()) {
    if (in_ < 0) return false;
    if (Clock::now() >= deadline) return false;
    ssize_t w = ::write(in_, data.data() + done, data.size() - done);
    if (w > 0) {
      done += static_cast<std::size_t>(w);
      continue;
    }
    if (w < 0 && errno == EPIPE) return false;
    if (w < 0 && errno != EAGAIN && errno != EINTR) return false;
    // Input pipe is full: drain the child's output while waiting for room.
    pollfd fds[3];
    int n = 0;
    fds[n++] = {in_, POLLOUT, 0};
    if (out_ >= 0) fds[n++] = {out_, POLLIN, 0};
    if (err_fd_ >= 0) fds[n++] = {err_fd_, POLLIN, 0};
    ::poll(fds, static_cast<nfds_t>(n), millis_until(deadline));
    if ((fds[0].revents & (POLLERR | POLLHUP)) != 0) return false;
    if (n > 1 && fds[1].revents != 0) pump(Clock::now(), true);
  }
  return true;
}

void Subprocess::close_stdin() { close_fd(in_); }

Subprocess::ReadStatus Subprocess::read_line(std::string& line, Clock::time_point deadline) {
  for (;;) {
    if (auto nl = out_buf_.find('\n'); nl != std::string::npos) {
      line = out_buf_.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      out_buf_.erase(0, nl + 1);
      return ReadStatus::kLine;
    }
    if (out_eof_) {
      if (out_buf_.empty()) return ReadStatus::kEof;
      line = std::move(out_buf_);
      out_buf_.clear();
      return ReadStatus::kLine;
    }
    if (Clock::now() >= deadline || !pump(deadline, true)) return ReadStatus::kTimeout;
  }
}

Subprocess::ReadStatus Subprocess::read_all(std::string& out, Clock::time_point deadline) {
  while (!out_eof_) {
    if (Clock::now() >= deadline || !pump(deadline, true)) return ReadStatus::kTimeout;
  }
  out = std::move(out_buf_);
  out_buf_.clear();
  return ReadStatus::kEof;
}

std::optional<ExitStatus> Subprocess::wait(Clock::time_point deadline) {
  while (!status_) {
    int st = 0;
    pid_t r = ::waitpid(pid_, &st, WNOHANG);
    if (r == pid_) {
      status_ = decode_status(st);
      break;
    }
    if (r < 0 && errno != EINTR) throw std::runtime_error(std::string("waitpid: ") + std::strerror(errno));
    if (Clock::now() >= deadline) {
      kill();
      return std::nullopt;
    }
    // Keep draining so a chatty child cannot block on a full pipe.
    if (out_ >= 0 || err_fd_ >= 0) {
      pump(std::min(deadline, Clock::now() + std::chrono::milliseconds(10)), true);
    } else {
      ::usleep(1000);
    }
  }
  // Collect whatever stderr is still buffered; a grandchild may hold it open.
  const auto drain_until = Clock::now() + std::chrono::milliseconds(200);
  while (err_fd_ >= 0 && Clock::now() < drain_until) pump(drain_until, false);
  return status_;
}

void Subprocess::kill() {
  if (status_ || pid_ <= 0) return;
  ::kill(pid_, SIGKILL);
  int st = 0;
  while (::waitpid(pid_, &st, 0) < 0 && errno == EINTR) {
  }
  status_ = decode_status(st);
}

CommandResult run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  Subprocess p(argv);
  CommandResult r;
  p.write_all(input, deadline);   // a child that ignores its input is not an error
  p.close_stdin();
  if (p.read_all(r.out, deadline) == Subprocess::ReadStatus::kTimeout) {
    p.kill();
    r.timed_out = true;
  }
  auto st = p.wait(deadline);
  if (!st) {
    r.timed_out = true;
    st = ExitStatus{false, 0, true, SIGKILL};
  }
  r.status = *st;
  r.err = p.stderr_text();
  return r;
}

CommandResult run_shell(const std::string& command, const std::string& input,
                        std::chrono::milliseconds timeout) {
  return run_command({"/bin/sh", "-c", command}, input, timeout);
}

}  // namespace tdforge
