// SPDX-License-Identifier: Apache-2.0
#include "htlab/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "htlab/errors.hpp"
#include "htlab/serialize.hpp"
#include "htlab/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace htlab {

std::string to_string(JobStatus s) {
  switch (s) {
    case JobStatus::generated: return "generated";
    case JobStatus::non_compliant_final: return "non_compliant_final";
    case JobStatus::evaluated: return "evaluated";
  }
  return "generated";
}

JobStatus job_status_from_string(std::string_view s) {
  std::string l = to_lower(trim(s));
  if (l == "generated") return JobStatus::generated;
  if (l == "non_compliant_final") return JobStatus::non_compliant_final;
  if (l == "evaluated") return JobStatus::evaluated;
  throw Error(Errc::invalid_argument, "unknown job status: " + std::string(s));
}

CampaignSpec CampaignSpec::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "campaign spec not found: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, file.string() + ": " + e.what());
  }

  CampaignSpec spec;
  fs::path base = fs::absolute(file).parent_path();
  auto resolve = [&](const std::string& p) -> fs::path {
    fs::path path = p;
    return path.is_relative() ? (base / path).lexically_normal() : path;
  };

  try {
    for (const auto& d : j.at("design_ids")) spec.design_ids.push_back(d.get<std::string>());
    for (const auto& t : j.at("ht_types"))
      spec.ht_types.push_back(ht_type_from_string(t.get<std::string>()));
    for (const auto& m : j.at("model_ids")) spec.model_ids.push_back(m.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, file.string() + ": " + e.what());
  }
  spec.max_modify_rounds = j.value("max_modify_rounds", 2);
  spec.run_gauntlet = j.value("run_gauntlet", true);
  if (j.contains("output_dir")) spec.output_dir = resolve(j.at("output_dir").get<std::string>());
  if (j.contains("registry_dir")) spec.registry_dir = resolve(j.at("registry_dir").get<std::string>());
  if (j.contains("templates_dir")) spec.templates_dir = resolve(j.at("templates_dir").get<std::string>());
  if (j.contains("models_file")) spec.models_file = resolve(j.at("models_file").get<std::string>());
  if (j.contains("profile_file")) spec.profile_file = resolve(j.at("profile_file").get<std::string>());
  if (j.contains("mock_script")) spec.mock_script = resolve(j.at("mock_script").get<std::string>());
  if (j.contains("review_model_id"))
    spec.review_model_id = j.at("review_model_id").get<std::string>();
  spec.parallel_jobs = j.value("parallel_jobs", 1);
  spec.export_survivors = j.value("export_survivors", true);

  if (spec.design_ids.empty() || spec.ht_types.empty() || spec.model_ids.empty())
    throw Error(Errc::config_error, "campaign lists must be non-empty");
  if (spec.max_modify_rounds < 0)
    throw Error(Errc::config_error, "max_modify_rounds must be >= 0");
  return spec;
}

bool parse_review_verdict(std::string_view review_text, std::string* reason) {
  for (const auto& line : split_lines(review_text)) {
    std::string upper;
    for (char c : line) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    size_t pos = upper.find("VERDICT");
    if (pos == std::string::npos) continue;
    std::string rest = upper.substr(pos);
    size_t yes = rest.find("YES");
    size_t no = rest.find("NO");
    if (yes != std::string::npos && (no == std::string::npos || yes < no)) return true;
    if (no != std::string::npos) {
      if (reason) *reason = trim(line);
      return false;
    }
  }
  if (reason) *reason = "no verdict line in review";
  return false;
}

Orchestrator::Orchestrator(DesignRegistry& registry, LlmClient& client, PromptLibrary prompts,
                           ToolchainProfile profile)
    : registry_(registry),
      client_(client),
      prompts_(std::move(prompts)),
      profile_(std::move(profile)),
      gauntlet_(profile_, registry.root() / "cache") {}

namespace {

bool mentions_any(const std::string& haystack, std::initializer_list<const char*> needles) {
  for (const char* n : needles)
    if (haystack.find(n) != std::string::npos) return true;
  return false;
}

}  // namespace

ComplianceVerdict Orchestrator::check_compliance(const ModelConfig& cfg,
                                                 const ExtractedArtifact& artifact,
                                                 const PromptSection& rvp, const Design& design,
                                                 const CombinedPrompt& original_prompt) {
  if (artifact.infected_rtl.empty())
    throw Error(Errc::invalid_argument, "compliance check requires a non-empty artifact");

  ComplianceVerdict verdict;

  // (a) Static checks.
  auto emitted = declared_modules(artifact.infected_rtl);
  bool top_in_artifact =
      std::find(emitted.begin(), emitted.end(), design.top_module) != emitted.end();
  bool top_in_merged = top_in_artifact;
  if (!top_in_merged) {
    // The top module survives the merge if the response did not re-emit
    // any module of the file that declares it.
    for (const auto& file : design.rtl_files) {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      auto file_modules = declared_modules(ss.str());
      bool declares_top =
          std::find(file_modules.begin(), file_modules.end(), design.top_module) !=
          file_modules.end();
      if (!declares_top) continue;
      bool replaced = false;
      for (const auto& m : file_modules)
        if (std::find(emitted.begin(), emitted.end(), m) != emitted.end()) replaced = true;
      top_in_merged = !replaced;
    }
  }
  if (!top_in_merged)
    verdict.static_check_failures.push_back("top module '" + design.top_module + "' missing");
  if (artifact.taxonomy.empty()) verdict.static_check_failures.push_back("taxonomy empty");

  std::string expl = to_lower(artifact.explanation);
  if (!mentions_any(expl, {"trigger", "activat"}))
    verdict.static_check_failures.push_back("explanation does not mention a trigger");
  if (!mentions_any(expl, {"payload", "leak", "effect", "disab", "corrupt", "disrupt"}))
    verdict.static_check_failures.push_back("explanation does not mention a payload");

  // (b) Reflexive review round.
  ChatTurns turns;
  if (const PromptSection* role = original_prompt.section(SectionKind::role))
    turns.system_text = role->text;
  turns.user_text = rvp.text +
                    "\n\nCode under review:\nCode: <" + artifact.infected_rtl + ">" +
                    "\n\nTaxonomy: " + artifact.taxonomy.raw +
                    "\n\nRespond with a line 'VERDICT: YES' if the implementation satisfies "
                    "every directive above, or 'VERDICT: NO - <reason>' otherwise.";

  bool review_yes = false;
  try {
    RawResponse review = client_.infer_turns(cfg, turns);
    verdict.llm_review_text = review.text;
    std::string reason;
    review_yes = parse_review_verdict(review.text, &reason);
    if (!review_yes && verdict.llm_review_text.empty()) verdict.llm_review_text = reason;
  } catch (const Error& e) {
    verdict.llm_review_text = std::string("gateway error during review: ") + e.what();
    review_yes = false;
  }

  verdict.compliant = verdict.static_check_failures.empty() && review_yes;
  return verdict;
}

ExtractedArtifact Orchestrator::request_modification(const ModelConfig& cfg,
                                                     const CombinedPrompt& original,
                                                     const ExtractedArtifact& prior,
                                                     const ComplianceVerdict& verdict) {
  if (verdict.compliant)
    throw Error(Errc::invalid_argument,
                "request_modification requires a non-compliant verdict");

  ChatTurns turns;
  std::string user;
  for (const auto& s : original.sections) {
    if (s.kind == SectionKind::role) {
      turns.system_text = s.text;
      continue;
    }
    if (!user.empty()) user += "\n\n";
    user += s.text;
  }
  user += "\n\nYour previous response contained this code:\nCode: <" + prior.infected_rtl + ">";
  user += "\n\nIt was found non-compliant for the following reasons:\n";
  for (const auto& f : verdict.static_check_failures) user += "- " + f + "\n";
  if (!verdict.llm_review_text.empty()) user += "- review: " + verdict.llm_review_text + "\n";
  user +=
      "\nModify the design to address every issue and respond again in the full "
      "Code/Explanation/Taxonomy format.";
  turns.user_text = std::move(user);

  RawResponse response = client_.infer_turns(cfg, turns);
  return extract_sections(response.text);
}

std::vector<ModelConfig> Orchestrator::resolve_models(const CampaignSpec& spec) const {
  std::vector<ModelConfig> registry = spec.models_file.empty()
                                          ? default_model_registry()
                                          : load_model_registry(spec.models_file);
  if (!spec.mock_script.empty()) {
    for (auto& cfg : registry)
      if (cfg.provider == ProviderKind::mock && cfg.mock_script.empty())
        cfg.mock_script = spec.mock_script.string();
  }
  return registry;
}

JobResult Orchestrator::run_job(const Design& design, HTType ht_type, const ModelConfig& cfg,
                                const CampaignSpec& spec) {
  JobResult job;
  job.design_id = design.id;
  job.ht_type = ht_type;
  job.model_id = cfg.model_id;
  job.created_at = iso8601_now();
  fs::path job_dir = spec.output_dir / cfg.model_id / design.id / to_string(ht_type);
  job.job_dir = fs::path(cfg.model_id) / design.id / to_string(ht_type);
  fs::create_directories(job_dir);

  CombinedPrompt prompt;
  RawResponse response;
  try {
    prompt = build_prompt(prompts_, design, ht_type, cfg.context_window_tokens);
    job.prompt_fingerprint = fnv1a64_hex(prompt.rendered_text);
    response = client_.infer(cfg, prompt);
    job.response_text = response.text;
    job.latency_ms = response.latency.count();
    job.artifact = extract_sections(response.text);
  } catch (const Error& e) {
    job.error = e.what();
    job.status = JobStatus::non_compliant_final;
    job.compliance.compliant = false;
    job.compliance.static_check_failures.push_back(std::string("generation failed: ") + e.what());
    return job;
  }

  ModelConfig review_cfg = cfg;
  if (spec.review_model_id && *spec.review_model_id != cfg.model_id)
    review_cfg = select_model(resolve_models(spec), ht_type,
                              {SelectionPolicy::Kind::by_name, *spec.review_model_id});
  job.compliance = check_compliance(review_cfg, job.artifact, prompts_.validation, design, prompt);
  while (!job.compliance.compliant && job.modify_rounds_used < spec.max_modify_rounds) {
    try {
      ExtractedArtifact revised =
          request_modification(review_cfg, prompt, job.artifact, job.compliance);
      ++job.modify_rounds_used;
      job.artifact = revised;
      job.compliance =
          check_compliance(review_cfg, job.artifact, prompts_.validation, design, prompt);
    } catch (const Error& e) {
      ++job.modify_rounds_used;
      job.error = std::string("modification round failed: ") + e.what();
      break;
    }
  }

  if (spec.run_gauntlet) {
    job.eval_record = gauntlet_.run(job.artifact, design, ht_type, cfg.model_id, job_dir / "work");
    job.status = JobStatus::evaluated;
    if (spec.export_survivors && job.eval_record->survived())
      registry_.export_benchmark(*job.eval_record, job.artifact);
  } else {
    job.status =
        job.compliance.compliant ? JobStatus::generated : JobStatus::non_compliant_final;
  }
  return job;
}

std::vector<JobResult> Orchestrator::run_campaign(const CampaignSpec& spec) {
  // Resolve everything up front: an unresolvable spec must fail before
  // any job starts.
  if (spec.output_dir.empty())
    throw Error(Errc::config_error, "campaign has no output_dir (set it in the spec or via --out)");
  std::vector<Design> designs;
  for (const auto& id : spec.design_ids) {
    if (!registry_.has_design(id))
      throw Error(Errc::config_error, "design not in registry: " + id);
    designs.push_back(registry_.get_design(id));
  }
  std::vector<ModelConfig> registry = resolve_models(spec);
  std::vector<ModelConfig> models;
  for (const auto& id : spec.model_ids)
    models.push_back(select_model(registry, spec.ht_types.front(),
                                  {SelectionPolicy::Kind::by_name, id}));
  if (spec.review_model_id)
    select_model(registry, spec.ht_types.front(),
                 {SelectionPolicy::Kind::by_name, *spec.review_model_id});

  struct Cell {
    const Design* design;
    HTType ht_type;
    const ModelConfig* model;
  };
  std::vector<Cell> cells;
  for (const auto& design : designs)
    for (HTType t : spec.ht_types)
      for (const auto& model : models) cells.push_back({&design, t, &model});

  std::vector<JobResult> results(cells.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      fs::path job_dir =
          spec.output_dir / cell.model->model_id / cell.design->id / to_string(cell.ht_type);
      fs::path job_file = job_dir / "job.json";

      // Resume: a persisted terminal job is reused without gateway calls.
      if (fs::exists(job_file)) {
        try {
          std::ifstream in(job_file, std::ios::binary);
          json j;
          in >> j;
          results[i] = j.get<JobResult>();
          continue;
        } catch (...) {
          // Unreadable job file: re-run the cell.
        }
      }

      JobResult job;
      try {
        job = run_job(*cell.design, cell.ht_type, *cell.model, spec);
      } catch (const std::exception& e) {
        job.design_id = cell.design->id;
        job.ht_type = cell.ht_type;
        job.model_id = cell.model->model_id;
        job.status = JobStatus::non_compliant_final;
        job.error = e.what();
      }

      fs::create_directories(job_dir);
      fs::path tmp = job_file;
      tmp += ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << json(job).dump(2) << "\n";
      }
      fs::rename(tmp, job_file);
      results[i] = std::move(job);
    }
  };

  int n_threads = std::max(1, spec.parallel_jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace htlab
