// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace htlab {

enum class Errc {
  // corpus
  missing_file,
  duplicate_name,
  manifest_parse,
  not_survived,
  io_failure,
  // prompts
  unresolved_placeholder,
  missing_ctp,
  design_read,
  oversize_for_model,
  // gateway
  empty_registry,
  auth_failure,
  rate_limited,
  timeout,
  provider_error,
  // extract
  no_code_found,
  // orchestrator
  config_error,
  gateway_error,
  // gauntlet
  tool_not_found,
  golden_missing,
  synth_failure,
  stat_parse,
  // metrics
  zero_baseline,
  schema_version_mismatch,
  // general
  invalid_argument,
};

const char* errc_name(Errc code);

/// Exception carrying a machine-checkable error category alongside the message.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

}  // namespace htlab
