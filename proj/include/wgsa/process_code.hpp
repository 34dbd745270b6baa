#pragma once

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <memory>
#include <span>
#include <string>

#include "wgsa/errors.hpp"
#include "wgsa/stochastic.hpp"

namespace wgsa {

// External simulator over a line protocol: one line of space-separated input
// values on its standard input per call, one real on its standard output.
// A nonzero exit (or closed pipe) is reported as a simulator failure.  The
// child process owns its randomness; the per-call seed is not transmitted.
class ExternalProcessCode {
 public:
  explicit ExternalProcessCode(std::string command) : command_(std::move(command)) {}

  ~ExternalProcessCode() { shutdown(); }

  ExternalProcessCode(const ExternalProcessCode&) = delete;
  ExternalProcessCode& operator=(const ExternalProcessCode&) = delete;

  double call(std::span<const double> x) {
    ensure_started();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::fprintf(to_child_, i ? " %.17g" : "%.17g", x[i]) < 0) {
        fail("write to simulator failed");
      }
    }
    if (std::fputc('\n', to_child_) == EOF || std::fflush(to_child_) != 0) {
      fail("write to simulator failed");
    }
    char* line = nullptr;
    std::size_t cap = 0;
    const ssize_t got = ::getline(&line, &cap, from_child_);
    std::unique_ptr<char, decltype(&std::free)> guard(line, &std::free);
    if (got <= 0) fail("simulator closed its output");
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(line, &end);
    if (end == line || errno == ERANGE) {
      throw SimulatorError(std::string("simulator wrote a non-numeric line: ") + line);
    }
    return value;
  }

  // Wrap as a StochasticCode; the adapter is not reentrant (single pipe pair).
  StochasticCode code(int input_dim) {
    auto self = this;
    StochasticCode c;
    c.input_dim = input_dim;
    c.reentrant = false;
    c.evaluate = [self](std::span<const double> x, std::uint64_t) { return self->call(x); };
    return c;
  }

 private:
  void ensure_started() {
    if (pid_ > 0) return;
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
      throw SimulatorError("could not create pipes for external simulator");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw SimulatorError("could not fork external simulator");
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      std::_Exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = ::fdopen(in_pipe[1], "w");
    from_child_ = ::fdopen(out_pipe[0], "r");
    if (!to_child_ || !from_child_) throw SimulatorError("could not open simulator pipes");
  }

  [[noreturn]] void fail(const std::string& what) {
    const int status = shutdown();
    std::string msg = what + " (command: " + command_ + ")";
    if (WIFEXITED(status) && WEXITSTATUS(status) != 0) {
      msg += ", exit status " + std::to_string(WEXITSTATUS(status));
    }
    throw SimulatorError(msg);
  }

  int shutdown() {
    if (to_child_) {
      std::fclose(to_child_);
      to_child_ = nullptr;
    }
    if (from_child_) {
      std::fclose(from_child_);
      from_child_ = nullptr;
    }
    int status = 0;
    if (pid_ > 0) {
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
    return status;
  }

  std::string command_;
  pid_t pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
};

}  // namespace wgsa
