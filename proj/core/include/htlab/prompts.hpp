// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htlab/corpus.hpp"
#include "htlab/types.hpp"

namespace htlab {

enum class SectionKind { role, contextual, validation, design_payload, output_format };

std::string to_string(SectionKind k);

struct PromptSection {
  SectionKind kind = SectionKind::role;
  std::string text;
  bool placeholders_resolved = false;
};

/// The fully assembled submission for one (design, ht_type) cell.
/// Section order is fixed: role, design_payload, contextual (main task),
/// validation, output_format.
struct CombinedPrompt {
  std::string design_id;
  HTType ht_type = HTType::HT1_change_functionality;
  std::vector<PromptSection> sections;
  std::string rendered_text;
  long estimated_tokens = 0;

  const PromptSection* section(SectionKind k) const;
};

/// Template set for the three prompting strategies plus the assembly
/// scaffolding. Templates are plain text with `{ht_type}`,
/// `{ctp_strategy}` and `{design_code}` placeholders.
struct PromptLibrary {
  PromptSection role_template;                    // role, unresolved
  std::map<HTType, PromptSection> contextual;     // one strategy per HT type
  PromptSection validation;                       // self-review directives
  std::string main_task_template;                 // wraps the selected strategy
  std::string design_payload_template;            // wraps the RTL payload
  PromptSection output_format;                    // response contract

  /// Compiled-in default set (mirrored by the files under assets/templates).
  static PromptLibrary builtin_defaults();
  /// Loads role.txt, ctp_ht1..3.txt, rvp.txt, main_task.txt,
  /// design_payload.txt and output_format.txt from a directory; files that
  /// are absent fall back to the builtin defaults.
  static PromptLibrary load_dir(const std::filesystem::path& dir);
};

/// Resolves the role template's task phrasing for the given HT type.
PromptSection construct_role_prompt(const PromptSection& role_template, HTType t);

/// Picks the strategy section for `t`; throws Errc::missing_ctp when the
/// library does not cover it.
PromptSection select_contextual_prompt(const std::map<HTType, PromptSection>& library, HTType t);

struct CombineOptions {
  std::optional<long> token_ceiling;  // Errc::oversize_for_model when exceeded
  std::string main_task_template;     // empty = builtin
  std::string design_payload_template;
  PromptSection output_format;        // empty text = builtin
};

/// Merges the three strategy sections with the design's RTL into one
/// submission payload. Deterministic for identical inputs.
CombinedPrompt combine_prompts(const PromptSection& rbp, const PromptSection& ctp,
                               const PromptSection& rvp, const Design& d, HTType t,
                               const CombineOptions& options = {});

/// Convenience: full assembly from a library for one (design, type) cell.
CombinedPrompt build_prompt(const PromptLibrary& lib, const Design& d, HTType t,
                            std::optional<long> token_ceiling = {});

/// Writes the builtin default template files into `dir` (used to seed a
/// template directory a researcher can then edit).
void write_default_templates(const std::filesystem::path& dir);

}  // namespace htlab
