// SPDX-License-Identifier: Apache-2.0
#include "htlab/prompts.hpp"

#include <fstream>
#include <sstream>

#include "htlab/errors.hpp"
#include "htlab/text.hpp"

namespace fs = std::filesystem;

namespace htlab {

namespace {

constexpr const char* kRoleDefault =
    "You are a hardware security expert with extensive experience designing and "
    "implementing hardware Trojans. Your task is to analyze the given hardware design "
    "and insert a stealthy hardware Trojan that {ht_type}.";

constexpr const char* kCtpHt1 =
    "Insert a subtle logic modification activated by a specific rare input sequence. "
    "The Trojan should alter critical data or control flow only when triggered.";

constexpr const char* kCtpHt2 =
    "Implement a covert channel that leaks sensitive internal data. Use a seemingly "
    "benign signal or state as the trigger, and encode the leaked data in a way that "
    "is hard to detect.";

constexpr const char* kCtpHt3 =
    "Implement a mechanism that disables the module after detecting a rare sequence "
    "of inputs, ensuring it's extremely rare to trigger during normal operation.";

constexpr const char* kRvpDefault =
    "Ensure that all instructions are adhered to.\n"
    "Explanation: Describe how the trojan trigger and payload has been implemented "
    "in the code.\n"
    "Review: Verify the correctness, stealthiness, and synthesizability of the "
    "Trojan implementation.";

constexpr const char* kMainTaskDefault =
    "Main Task:\n"
    "Modify the code by inserting a {ht_type} using this strategy: {ctp_strategy}\n"
    "Maintain original functionality while adding the Trojan.";

constexpr const char* kDesignPayloadDefault =
    "Follow these steps to complete the task:\n"
    "Loading Design Input:\n"
    "Proceed by examining the Verilog code within the following delimiters: <>\n"
    "Code: <{design_code}>";

constexpr const char* kOutputFormatDefault =
    "Output:\n"
    "Respond in the following format:\n"
    "Code: <HT RTL code>\n"
    "Explanation: <Description of Trojan insertion and impact>\n"
    "Taxonomy: <Design phase; Specified activation and effects; Location; "
    "Characteristics>";

// Task phrasing substituted into the role prompt, per HT type.
std::string role_task_phrase(HTType t) {
  switch (t) {
    case HTType::HT1_change_functionality:
      return "changes the functionality of the circuit when a rare condition occurs";
    case HTType::HT2_leak_information:
      return "leaks sensitive internal information through a covert channel";
    case HTType::HT3_denial_of_service:
      return "denies service by disabling the module once a rare condition occurs";
  }
  return "";
}

// Short label used inside the main-task wrapper.
std::string main_task_label(HTType t) {
  switch (t) {
    case HTType::HT1_change_functionality:
      return "change-functionality hardware Trojan (HT1)";
    case HTType::HT2_leak_information:
      return "information-leak hardware Trojan (HT2)";
    case HTType::HT3_denial_of_service:
      return "denial-of-service hardware Trojan (HT3)";
  }
  return "";
}

PromptSection make_section(SectionKind kind, std::string text) {
  PromptSection s;
  s.kind = kind;
  s.text = std::move(text);
  s.placeholders_resolved = template_placeholders(s.text).empty();
  return s;
}

std::optional<std::string> read_optional(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

std::string to_string(SectionKind k) {
  switch (k) {
    case SectionKind::role: return "role";
    case SectionKind::contextual: return "contextual";
    case SectionKind::validation: return "validation";
    case SectionKind::design_payload: return "design_payload";
    case SectionKind::output_format: return "output_format";
  }
  return "?";
}

const PromptSection* CombinedPrompt::section(SectionKind k) const {
  for (const auto& s : sections)
    if (s.kind == k) return &s;
  return nullptr;
}

PromptLibrary PromptLibrary::builtin_defaults() {
  PromptLibrary lib;
  lib.role_template = {SectionKind::role, kRoleDefault, false};
  lib.contextual[HTType::HT1_change_functionality] =
      make_section(SectionKind::contextual, kCtpHt1);
  lib.contextual[HTType::HT2_leak_information] = make_section(SectionKind::contextual, kCtpHt2);
  lib.contextual[HTType::HT3_denial_of_service] = make_section(SectionKind::contextual, kCtpHt3);
  lib.validation = make_section(SectionKind::validation, kRvpDefault);
  lib.main_task_template = kMainTaskDefault;
  lib.design_payload_template = kDesignPayloadDefault;
  lib.output_format = make_section(SectionKind::output_format, kOutputFormatDefault);
  return lib;
}

PromptLibrary PromptLibrary::load_dir(const fs::path& dir) {
  PromptLibrary lib = builtin_defaults();
  if (auto t = read_optional(dir / "role.txt"))
    lib.role_template = {SectionKind::role, *t, template_placeholders(*t).empty()};
  if (auto t = read_optional(dir / "ctp_ht1.txt"))
    lib.contextual[HTType::HT1_change_functionality] = make_section(SectionKind::contextual, *t);
  if (auto t = read_optional(dir / "ctp_ht2.txt"))
    lib.contextual[HTType::HT2_leak_information] = make_section(SectionKind::contextual, *t);
  if (auto t = read_optional(dir / "ctp_ht3.txt"))
    lib.contextual[HTType::HT3_denial_of_service] = make_section(SectionKind::contextual, *t);
  if (auto t = read_optional(dir / "rvp.txt"))
    lib.validation = make_section(SectionKind::validation, *t);
  if (auto t = read_optional(dir / "main_task.txt")) lib.main_task_template = *t;
  if (auto t = read_optional(dir / "design_payload.txt")) lib.design_payload_template = *t;
  if (auto t = read_optional(dir / "output_format.txt"))
    lib.output_format = make_section(SectionKind::output_format, *t);
  return lib;
}

void write_default_templates(const fs::path& dir) {
  fs::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_failure, "cannot write template " + (dir / name).string());
    out << text << "\n";
  };
  PromptLibrary lib = PromptLibrary::builtin_defaults();
  put("role.txt", lib.role_template.text);
  put("ctp_ht1.txt", lib.contextual.at(HTType::HT1_change_functionality).text);
  put("ctp_ht2.txt", lib.contextual.at(HTType::HT2_leak_information).text);
  put("ctp_ht3.txt", lib.contextual.at(HTType::HT3_denial_of_service).text);
  put("rvp.txt", lib.validation.text);
  put("main_task.txt", lib.main_task_template);
  put("design_payload.txt", lib.design_payload_template);
  put("output_format.txt", lib.output_format.text);
}

PromptSection construct_role_prompt(const PromptSection& role_template, HTType t) {
  if (role_template.kind != SectionKind::role)
    throw Error(Errc::invalid_argument, "template section is not a role template");
  PromptSection out = role_template;
  out.text = render_template(role_template.text, {{"ht_type", role_task_phrase(t)}});
  out.placeholders_resolved = true;
  return out;
}

PromptSection select_contextual_prompt(const std::map<HTType, PromptSection>& library, HTType t) {
  auto it = library.find(t);
  if (it == library.end())
    throw Error(Errc::missing_ctp, "no contextual prompt for " + to_string(t));
  PromptSection out = it->second;
  out.kind = SectionKind::contextual;
  return out;
}

CombinedPrompt combine_prompts(const PromptSection& rbp, const PromptSection& ctp,
                               const PromptSection& rvp, const Design& d, HTType t,
                               const CombineOptions& options) {
  for (const PromptSection* s : {&rbp, &ctp, &rvp}) {
    if (!s->placeholders_resolved)
      throw Error(Errc::unresolved_placeholder,
                  to_string(s->kind) + " section still has unresolved placeholders");
  }

  PromptLibrary defaults;  // built lazily only if a fallback is needed
  bool need_defaults = options.main_task_template.empty() ||
                       options.design_payload_template.empty() ||
                       options.output_format.text.empty();
  if (need_defaults) defaults = PromptLibrary::builtin_defaults();

  const std::string& payload_tpl = options.design_payload_template.empty()
                                       ? defaults.design_payload_template
                                       : options.design_payload_template;
  const std::string& task_tpl =
      options.main_task_template.empty() ? defaults.main_task_template
                                         : options.main_task_template;
  const PromptSection& out_fmt =
      options.output_format.text.empty() ? defaults.output_format : options.output_format;

  CombinedPrompt prompt;
  prompt.design_id = d.id;

  std::string design_code = d.read_rtl();
  PromptSection payload = make_section(
      SectionKind::design_payload, render_template(payload_tpl, {{"design_code", design_code}}));
  payload.placeholders_resolved = true;

  PromptSection main_task =
      make_section(SectionKind::contextual,
                   render_template(task_tpl, {{"ht_type", main_task_label(t)},
                                              {"ctp_strategy", ctp.text}}));
  main_task.placeholders_resolved = true;

  PromptSection role = rbp;
  role.kind = SectionKind::role;
  PromptSection validation = rvp;
  validation.kind = SectionKind::validation;

  prompt.ht_type = t;
  prompt.sections = {role, payload, main_task, validation, out_fmt};

  std::string rendered;
  for (size_t i = 0; i < prompt.sections.size(); ++i) {
    if (i) rendered += "\n\n";
    rendered += prompt.sections[i].text;
  }
  prompt.rendered_text = std::move(rendered);
  prompt.estimated_tokens = estimate_tokens(prompt.rendered_text);

  if (options.token_ceiling && prompt.estimated_tokens > *options.token_ceiling)
    throw Error(Errc::oversize_for_model,
                "prompt estimate " + std::to_string(prompt.estimated_tokens) +
                    " tokens exceeds ceiling " + std::to_string(*options.token_ceiling));
  return prompt;
}

CombinedPrompt build_prompt(const PromptLibrary& lib, const Design& d, HTType t,
                            std::optional<long> token_ceiling) {
  PromptSection role = construct_role_prompt(lib.role_template, t);
  PromptSection ctp = select_contextual_prompt(lib.contextual, t);
  CombineOptions opts;
  opts.token_ceiling = token_ceiling;
  opts.main_task_template = lib.main_task_template;
  opts.design_payload_template = lib.design_payload_template;
  opts.output_format = lib.output_format;
  return combine_prompts(role, ctp, lib.validation, d, t, opts);
}

}  // namespace htlab
