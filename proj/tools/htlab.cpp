// SPDX-License-Identifier: Apache-2.0
//
// htlab - command-line frontend for the trojan-insertion research harness.
// Subcommands: register, list, generate, evaluate, campaign, report,
// export, detect, preflight. Exit codes: 0 success, 1 user error,
// 2 environment error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "htlab/corpus.hpp"
#include "htlab/errors.hpp"
#include "htlab/gateway.hpp"
#include "htlab/gauntlet.hpp"
#include "htlab/metrics.hpp"
#include "htlab/orchestrator.hpp"
#include "htlab/prompts.hpp"
#include "htlab/serialize.hpp"
#include "htlab/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace htlab;
using nlohmann::json;

namespace {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::tool_not_found:
    case Errc::auth_failure:
    case Errc::timeout:
    case Errc::rate_limited:
    case Errc::provider_error:
    case Errc::io_failure:
    case Errc::golden_missing:
    case Errc::synth_failure:
      return 2;
    default:
      return 1;
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

PromptLibrary load_templates(const std::string& dir) {
  if (dir.empty()) return PromptLibrary::builtin_defaults();
  return PromptLibrary::load_dir(dir);
}

ToolchainProfile load_profile(const std::string& file) {
  if (file.empty()) return ToolchainProfile();
  return ToolchainProfile::load(file);
}

std::vector<ModelConfig> load_models(const std::string& file) {
  if (file.empty()) return default_model_registry();
  return load_model_registry(file);
}

struct CommonPaths {
  std::string registry, templates, models, profile;
  void add_flags(CLI::App* cmd) {
    cmd->add_option("--registry", registry, "Design registry directory");
    cmd->add_option("--templates", templates, "Prompt template directory");
    cmd->add_option("--models", models, "Model registry JSON file");
    cmd->add_option("--profile", profile, "Toolchain profile JSON file");
  }
  void apply_env() {
    if (registry.empty()) registry = env_or("HTLAB_REGISTRY", "");
    if (templates.empty()) templates = env_or("HTLAB_TEMPLATES", "");
    if (models.empty()) models = env_or("HTLAB_MODELS", "");
    if (profile.empty()) profile = env_or("HTLAB_PROFILE", "");
  }
  std::string registry_or_default() const { return registry.empty() ? "registry" : registry; }
};

void print_design(const Design& d) {
  std::cout << d.id << "  name=" << d.name << "  difficulty=" << to_string(d.difficulty)
            << "  top=" << d.top_module << "  lines=" << d.line_count << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-driven hardware trojan insertion and evaluation harness"};
  app.require_subcommand(1);

  // --- register ------------------------------------------------------------
  auto* reg_cmd = app.add_subcommand("register", "Register a clean design from a manifest");
  std::string reg_manifest;
  CommonPaths reg_paths;
  reg_cmd->add_option("manifest", reg_manifest, "Design manifest JSON")->required();
  reg_paths.add_flags(reg_cmd);

  // --- list ----------------------------------------------------------------
  auto* list_cmd = app.add_subcommand("list", "List registered designs");
  std::string list_difficulty;
  bool list_json = false;
  CommonPaths list_paths;
  list_cmd->add_option("--difficulty", list_difficulty, "Filter: easy|medium|hard");
  list_cmd->add_flag("--json", list_json, "Machine-readable output");
  list_paths.add_flags(list_cmd);

  // --- generate ------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("generate", "Run one generation cell (no gauntlet)");
  std::string gen_design, gen_ht, gen_model, gen_out, gen_mock;
  int gen_rounds = 2;
  CommonPaths gen_paths;
  gen_cmd->add_option("--design", gen_design, "Design id")->required();
  gen_cmd->add_option("--ht-type", gen_ht, "HT1|HT2|HT3")->required();
  gen_cmd->add_option("--model", gen_model, "Model id")->required();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_option("--mock-script", gen_mock, "Mock provider script (JSON lines)");
  gen_cmd->add_option("--max-modify-rounds", gen_rounds, "Bound on modification rounds");
  gen_paths.add_flags(gen_cmd);

  // --- evaluate ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the gauntlet on an existing job dir");
  std::string eval_job;
  CommonPaths eval_paths;
  eval_cmd->add_option("--job", eval_job, "Job directory containing job.json")->required();
  eval_paths.add_flags(eval_cmd);

  // --- campaign ------------------------------------------------------------
  auto* camp_cmd = app.add_subcommand("campaign", "Run a full campaign from a spec file");
  std::string camp_spec, camp_out, camp_mock, camp_results;
  int camp_jobs = 0;
  CommonPaths camp_paths;
  camp_cmd->add_option("--spec", camp_spec, "Campaign spec JSON")->required();
  camp_cmd->add_option("--out", camp_out, "Output directory (overrides spec)");
  camp_cmd->add_option("--mock-script", camp_mock, "Mock provider script (overrides spec)");
  camp_cmd->add_option("--results", camp_results, "Results file (default <out>/results.json)");
  camp_cmd->add_option("--jobs", camp_jobs, "Parallel jobs (default 1)");
  camp_paths.add_flags(camp_cmd);

  // --- report --------------------------------------------------------------
  auto* rep_cmd = app.add_subcommand("report", "Render a campaign report");
  std::string rep_results, rep_json;
  rep_cmd->add_option("--results", rep_results, "Results JSON file")->required();
  rep_cmd->add_option("--json", rep_json, "Also write the JSON twin to this path");

  // --- export --------------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("export", "Export survived trojans as benchmarks");
  std::string exp_results;
  CommonPaths exp_paths;
  exp_cmd->add_option("--results", exp_results, "Results JSON file")->required();
  exp_paths.add_flags(exp_cmd);

  // --- detect --------------------------------------------------------------
  auto* det_cmd = app.add_subcommand("detect", "Run an external detector over results");
  std::string det_results, det_cmd_tpl, det_id = "detector";
  long det_timeout_s = 14400;  // 4 hours
  det_cmd->add_option("--results", det_results, "Results JSON file")->required();
  det_cmd->add_option("--cmd", det_cmd_tpl, "Detector command template ({rtl})")->required();
  det_cmd->add_option("--timeout", det_timeout_s, "Per-run timeout in seconds (default 14400)");
  det_cmd->add_option("--detector-id", det_id, "Identifier recorded with each outcome");

  // --- preflight -----------------------------------------------------------
  auto* pre_cmd = app.add_subcommand("preflight", "Verify external tools are available");
  CommonPaths pre_paths;
  pre_paths.add_flags(pre_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*reg_cmd) {
      reg_paths.apply_env();
      DesignRegistry registry(reg_paths.registry_or_default());
      Design d = registry.register_design(reg_manifest);
      std::cout << "registered ";
      print_design(d);
      return 0;
    }

    if (*list_cmd) {
      list_paths.apply_env();
      DesignRegistry registry(list_paths.registry_or_default());
      std::optional<Difficulty> filter;
      if (!list_difficulty.empty()) filter = difficulty_from_string(list_difficulty);
      auto designs = registry.list_designs(filter);
      if (list_json) {
        json out = json::array();
        for (const auto& d : designs)
          out.push_back({{"id", d.id},
                         {"name", d.name},
                         {"difficulty", to_string(d.difficulty)},
                         {"top_module", d.top_module},
                         {"line_count", d.line_count}});
        std::cout << out.dump(2) << "\n";
      } else {
        for (const auto& d : designs) print_design(d);
      }
      return 0;
    }

    if (*gen_cmd) {
      gen_paths.apply_env();
      DesignRegistry registry(gen_paths.registry_or_default());
      LlmClient client;
      Orchestrator orchestrator(registry, client, load_templates(gen_paths.templates),
                                load_profile(gen_paths.profile));
      CampaignSpec spec;
      spec.design_ids = {gen_design};
      spec.ht_types = {ht_type_from_string(gen_ht)};
      spec.model_ids = {gen_model};
      spec.max_modify_rounds = gen_rounds;
      spec.run_gauntlet = false;
      spec.output_dir = gen_out;
      spec.models_file = gen_paths.models;
      if (!gen_mock.empty()) spec.mock_script = gen_mock;
      auto results = orchestrator.run_campaign(spec);
      const JobResult& job = results.at(0);
      std::cout << "status=" << to_string(job.status)
                << " compliant=" << (job.compliance.compliant ? "yes" : "no")
                << " modify_rounds=" << job.modify_rounds_used << "\n";
      if (!job.error.empty()) std::cout << "error: " << job.error << "\n";
      for (const auto& w : job.artifact.extraction_warnings)
        std::cout << "warning: " << w << "\n";
      std::cout << "job dir: " << (fs::path(gen_out) / job.job_dir).string() << "\n";
      return job.error.empty() ? 0 : 1;
    }

    if (*eval_cmd) {
      eval_paths.apply_env();
      DesignRegistry registry(eval_paths.registry_or_default());
      fs::path job_dir = eval_job;
      std::ifstream in(job_dir / "job.json", std::ios::binary);
      if (!in) throw Error(Errc::config_error, "no job.json under " + job_dir.string());
      json j;
      in >> j;
      JobResult job = j.get<JobResult>();
      Design design = registry.get_design(job.design_id);
      Gauntlet gauntlet(load_profile(eval_paths.profile), registry.root() / "cache");
      job.eval_record =
          gauntlet.run(job.artifact, design, job.ht_type, job.model_id, job_dir / "work");
      job.status = JobStatus::evaluated;
      std::ofstream out(job_dir / "job.json", std::ios::binary | std::ios::trunc);
      out << json(job).dump(2) << "\n";
      for (const auto& [stage, outcome] : job.eval_record->outcomes)
        std::cout << to_string(stage) << ": " << (outcome.passed ? "pass" : "FAIL") << "\n";
      return 0;
    }

    if (*camp_cmd) {
      camp_paths.apply_env();
      CampaignSpec spec = CampaignSpec::load(camp_spec);
      if (!camp_out.empty()) spec.output_dir = camp_out;
      if (!camp_mock.empty()) spec.mock_script = camp_mock;
      if (!camp_paths.registry.empty()) spec.registry_dir = camp_paths.registry;
      if (!camp_paths.models.empty()) spec.models_file = camp_paths.models;
      if (!camp_paths.templates.empty()) spec.templates_dir = camp_paths.templates;
      if (!camp_paths.profile.empty()) spec.profile_file = camp_paths.profile;
      if (camp_jobs > 0) spec.parallel_jobs = camp_jobs;
      if (spec.registry_dir.empty()) spec.registry_dir = camp_paths.registry_or_default();

      DesignRegistry registry(spec.registry_dir);
      LlmClient client;
      Orchestrator orchestrator(
          registry, client,
          spec.templates_dir.empty() ? PromptLibrary::builtin_defaults()
                                     : PromptLibrary::load_dir(spec.templates_dir),
          spec.profile_file.empty() ? ToolchainProfile()
                                    : ToolchainProfile::load(spec.profile_file));

      auto jobs = orchestrator.run_campaign(spec);
      CampaignResults results;
      results.jobs = jobs;
      fs::path results_path = camp_results.empty()
                                  ? spec.output_dir / "results.json"
                                  : fs::path(camp_results);
      persist_results(results, results_path);

      long survived = 0;
      for (const auto& job : jobs)
        if (job.eval_record && job.eval_record->survived()) ++survived;
      std::cout << jobs.size() << " job(s), " << survived << " survived\n";
      std::cout << "results: " << results_path.string() << "\n";
      return 0;
    }

    if (*rep_cmd) {
      CampaignResults results = load_results(rep_results);
      std::cout << render_report(results);
      if (!rep_json.empty()) {
        std::ofstream out(rep_json, std::ios::binary | std::ios::trunc);
        out << render_report_json(results);
      }
      return 0;
    }

    if (*exp_cmd) {
      exp_paths.apply_env();
      DesignRegistry registry(exp_paths.registry_or_default());
      CampaignResults results = load_results(exp_results);
      long exported = 0;
      for (const auto& job : results.jobs) {
        if (!job.eval_record || !job.eval_record->survived()) continue;
        registry.export_benchmark(*job.eval_record, job.artifact);
        ++exported;
      }
      std::cout << "exported " << exported << " benchmark(s) to "
                << registry.benchmarks_dir().string() << "\n";
      return 0;
    }

    if (*det_cmd) {
      CampaignResults results = load_results(det_results);
      fs::path scratch = fs::path(det_results).parent_path() / "detect_scratch";
      fs::create_directories(scratch);
      results.detections.clear();
      for (const auto& job : results.jobs) {
        if (job.artifact.infected_rtl.empty()) continue;
        fs::path rtl = scratch / (job.model_id + "_" + job.design_id + "_" +
                                  to_string(job.ht_type) + ".v");
        std::ofstream out(rtl, std::ios::binary | std::ios::trunc);
        out << job.artifact.infected_rtl;
        out.close();
        DetectionRecord rec;
        rec.design_id = job.design_id;
        rec.ht_type = job.ht_type;
        rec.model_id = job.model_id;
        rec.outcome = run_detector(rtl, det_cmd_tpl,
                                   std::chrono::milliseconds(det_timeout_s * 1000), det_id);
        results.detections.push_back(rec);
        std::cout << job.model_id << "/" << job.design_id << "/" << to_string(job.ht_type)
                  << ": " << to_string(rec.outcome.verdict) << "\n";
      }
      persist_results(results, det_results);
      return 0;
    }

    if (*pre_cmd) {
      pre_paths.apply_env();
      Gauntlet gauntlet(load_profile(pre_paths.profile), fs::temp_directory_path());
      auto missing = gauntlet.preflight();
      if (missing.empty()) {
        std::cout << "all toolchain binaries found\n";
        return 0;
      }
      for (const auto& m : missing) std::cerr << "missing: " << m << "\n";
      return 2;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
