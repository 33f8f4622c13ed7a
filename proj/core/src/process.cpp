// SPDX-License-Identifier: Apache-2.0
#include "htlab/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "htlab/errors.hpp"
#include "htlab/text.hpp"

namespace htlab {

namespace {

void append_capped(std::string& dst, const char* data, ssize_t n, std::size_t cap) {
  if (dst.size() >= cap || n <= 0) return;
  std::size_t room = cap - dst.size();
  dst.append(data, std::min<std::size_t>(static_cast<std::size_t>(n), room));
}

}  // namespace

ExecResult run_process(const ExecRequest& req) {
  ExecResult result;
  if (req.argv.empty()) throw Error(Errc::invalid_argument, "empty argv");

  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
    throw Error(Errc::io_failure, std::string("pipe: ") + std::strerror(errno));

  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) throw Error(Errc::io_failure, std::string("fork: ") + std::strerror(errno));

  if (pid == 0) {
    // Child: own process group so a timeout kill reaps grandchildren too.
    setpgid(0, 0);
    if (req.cwd && chdir(req.cwd->c_str()) != 0) _exit(127);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]); close(out_pipe[1]);
    close(err_pipe[0]); close(err_pipe[1]);

    std::vector<char*> argv;
    argv.reserve(req.argv.size() + 1);
    for (const auto& a : req.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);

  struct pollfd fds[2] = {
      {out_pipe[0], POLLIN, 0},
      {err_pipe[0], POLLIN, 0},
  };
  bool open_fd[2] = {true, true};
  char buf[8192];
  bool killed = false;

  auto deadline = start + req.timeout;
  while (open_fd[0] || open_fd[1]) {
    int wait_ms = -1;
    if (req.timeout.count() > 0 && !killed) {
      auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      wait_ms = static_cast<int>(std::max<long long>(0, remain.count()));
    }
    fds[0].fd = open_fd[0] ? out_pipe[0] : -1;
    fds[1].fd = open_fd[1] ? err_pipe[0] : -1;
    int rc = poll(fds, 2, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) {
      // Deadline hit: kill the whole group, then drain whatever remains.
      // The direct kill covers the window before the child's setpgid.
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      killed = true;
      result.timed_out = true;
      continue;
    }
    for (int i = 0; i < 2; ++i) {
      if (!open_fd[i] || fds[i].revents == 0) continue;
      if (fds[i].revents & (POLLIN | POLLHUP)) {
        ssize_t n = read(i == 0 ? out_pipe[0] : err_pipe[0], buf, sizeof(buf));
        if (n > 0) {
          append_capped(i == 0 ? result.stdout_text : result.stderr_text, buf, n,
                        req.max_capture_bytes);
        } else if (n == 0 || (n < 0 && errno != EINTR)) {
          close(i == 0 ? out_pipe[0] : err_pipe[0]);
          open_fd[i] = false;
        }
      } else if (fds[i].revents & (POLLERR | POLLNVAL)) {
        close(i == 0 ? out_pipe[0] : err_pipe[0]);
        open_fd[i] = false;
      }
    }
  }

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    if (result.exit_code == 127 && result.stdout_text.empty() && result.stderr_text.empty())
      result.spawn_failed = true;
  } else if (WIFSIGNALED(status)) {
    result.exit_code = -1;
    if (!result.timed_out) result.signaled = true;
  }
  return result;
}

bool command_available(const std::string& argv0) {
  if (argv0.empty()) return false;
  if (argv0.find('/') != std::string::npos)
    return access(argv0.c_str(), X_OK) == 0;
  const char* path_env = std::getenv("PATH");
  if (!path_env) return false;
  for (const auto& dir : split(path_env, ':')) {
    if (dir.empty()) continue;
    std::string candidate = dir + "/" + argv0;
    if (access(candidate.c_str(), X_OK) == 0) return true;
  }
  return false;
}

}  // namespace htlab
