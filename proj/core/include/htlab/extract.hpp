// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace htlab {

/// Four-segment trojan classification in the Trust-Hub style.
/// `raw` always preserves the unparsed text verbatim.
struct Taxonomy {
  std::string design_phase;
  std::string activation_and_effects;
  std::string location;
  std::string characteristics;
  std::string raw;

  bool empty() const {
    for (char c : raw)
      if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
    return true;
  }
};

/// Model output split into its contract sections. Everything the
/// extractor could not attribute to a section lands in residual_text, so
/// no response content is ever silently dropped.
struct ExtractedArtifact {
  std::string infected_rtl;
  std::string explanation;
  Taxonomy taxonomy;
  std::string residual_text;
  std::vector<std::string> extraction_warnings;
};

/// Locates the code, explanation, and taxonomy sections of a model
/// response. Code is found by, in priority order: a `Code:` header block,
/// the first fenced code block, or the outermost module...endmodule span.
/// Missing explanation/taxonomy produce warnings; missing code throws
/// Errc::no_code_found.
ExtractedArtifact extract_sections(std::string_view response_text);

/// Positional split on ';' into at most four trimmed segments.
/// Total: never throws; raw is retained byte-for-byte.
Taxonomy parse_taxonomy(std::string_view raw);

/// Cheap RTL sanity scan ahead of real compilation: module/endmodule
/// balance, top-module presence, and report-only flags for constructs
/// that will not synthesize (initial blocks, # delays).
std::vector<std::string> validate_rtl_shape(std::string_view code, std::string_view top_module);

/// Names of modules declared in `code` (comments and strings ignored).
std::vector<std::string> declared_modules(std::string_view code);

/// Input port names of `module_name` in `code`, ANSI or classic style.
/// Empty when the module is not found.
std::vector<std::string> module_input_ports(std::string_view code,
                                            std::string_view module_name);

/// Verilog source with comments and string literals blanked out
/// (length-preserving), for keyword scans that must not match inside them.
std::string strip_verilog_comments(std::string_view code);

}  // namespace htlab
