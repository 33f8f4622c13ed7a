// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace htlab {

struct ExecRequest {
  std::vector<std::string> argv;          // argv[0] resolved via PATH
  std::optional<std::filesystem::path> cwd;
  std::chrono::milliseconds timeout{0};   // 0 = unlimited
  std::size_t max_capture_bytes = 16u << 20;
};

struct ExecResult {
  int exit_code = -1;
  bool timed_out = false;
  bool signaled = false;      // terminated by a signal other than our timeout kill
  bool spawn_failed = false;  // exec failed (typically: binary not found)
  std::string stdout_text;
  std::string stderr_text;
  std::chrono::milliseconds elapsed{0};
};

/// Runs a child process without a shell, capturing stdout/stderr separately.
/// On timeout the whole process group is killed and `timed_out` is set.
ExecResult run_process(const ExecRequest& req);

/// PATH lookup for a command name (or direct check when it contains '/').
bool command_available(const std::string& argv0);

}  // namespace htlab
