// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "htlab/corpus.hpp"
#include "htlab/extract.hpp"
#include "htlab/gateway.hpp"
#include "htlab/gauntlet.hpp"
#include "htlab/prompts.hpp"

namespace htlab {

/// One full generation-and-evaluation run: the cartesian product of
/// designs x HT types x models, each cell one job.
struct CampaignSpec {
  std::vector<std::string> design_ids;
  std::vector<HTType> ht_types;
  std::vector<std::string> model_ids;
  int max_modify_rounds = 2;
  bool run_gauntlet = true;
  std::filesystem::path output_dir;

  // Resolution context. Empty paths fall back to built-in defaults.
  std::filesystem::path registry_dir;
  std::filesystem::path templates_dir;
  std::filesystem::path models_file;
  std::filesystem::path profile_file;
  std::filesystem::path mock_script;
  std::optional<std::string> review_model_id;  // default: same model reviews itself
  int parallel_jobs = 1;
  bool export_survivors = true;

  static CampaignSpec load(const std::filesystem::path& file);
};

enum class JobStatus { generated, non_compliant_final, evaluated };

std::string to_string(JobStatus s);
JobStatus job_status_from_string(std::string_view s);

struct ComplianceVerdict {
  bool compliant = false;
  std::string llm_review_text;
  std::vector<std::string> static_check_failures;
};

struct JobResult {
  std::string design_id;
  HTType ht_type = HTType::HT1_change_functionality;
  std::string model_id;
  ExtractedArtifact artifact;
  ComplianceVerdict compliance;
  int modify_rounds_used = 0;
  std::optional<EvalRecord> eval_record;
  JobStatus status = JobStatus::generated;

  // Provenance.
  std::string prompt_fingerprint;
  std::string response_text;
  std::string error;       // per-job failure note; never aborts the campaign
  std::string job_dir;     // relative to the campaign output dir
  std::string created_at;
  long latency_ms = 0;
};

/// Runs the insertion loop: build the three-strategy prompt, infer,
/// self-review, request modification while non-compliant (bounded), then
/// hand the artifact to the gauntlet. Jobs persist incrementally so an
/// interrupted campaign resumes without re-querying finished cells.
class Orchestrator {
public:
  Orchestrator(DesignRegistry& registry, LlmClient& client, PromptLibrary prompts,
               ToolchainProfile profile);

  std::vector<JobResult> run_campaign(const CampaignSpec& spec);

  /// Static checks plus one reflexive review round. The verdict is YES
  /// only when the static checks pass and the model's review says so.
  ComplianceVerdict check_compliance(const ModelConfig& cfg, const ExtractedArtifact& artifact,
                                     const PromptSection& rvp, const Design& design,
                                     const CombinedPrompt& original_prompt);

  /// One follow-up turn carrying the original prompt, the prior code and
  /// the failure reasons; re-extracts the reply. Requires a non-compliant
  /// verdict.
  ExtractedArtifact request_modification(const ModelConfig& cfg, const CombinedPrompt& original,
                                         const ExtractedArtifact& prior,
                                         const ComplianceVerdict& verdict);

  /// Runs one (design, ht_type, model) cell; exposed for the `generate`
  /// and `evaluate` CLI paths.
  JobResult run_job(const Design& design, HTType ht_type, const ModelConfig& cfg,
                    const CampaignSpec& spec);

private:
  std::vector<ModelConfig> resolve_models(const CampaignSpec& spec) const;

  DesignRegistry& registry_;
  LlmClient& client_;
  PromptLibrary prompts_;
  ToolchainProfile profile_;
  Gauntlet gauntlet_;
};

/// Review-turn parsing: scans for a VERDICT: YES/NO line (case-insensitive,
/// markdown tolerated). Absent or ambiguous lines count as NO.
bool parse_review_verdict(std::string_view review_text, std::string* reason = nullptr);

}  // namespace htlab
