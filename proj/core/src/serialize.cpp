// SPDX-License-Identifier: Apache-2.0
#include "htlab/serialize.hpp"

#include "htlab/errors.hpp"
#include "htlab/text.hpp"

using nlohmann::json;

namespace htlab {

void to_json(json& j, const Taxonomy& t) {
  j = json{
      {"design_phase", t.design_phase},
      {"activation_and_effects", t.activation_and_effects},
      {"location", t.location},
      {"characteristics", t.characteristics},
      {"raw", t.raw},
  };
}

void from_json(const json& j, Taxonomy& t) {
  t.design_phase = j.value("design_phase", "");
  t.activation_and_effects = j.value("activation_and_effects", "");
  t.location = j.value("location", "");
  t.characteristics = j.value("characteristics", "");
  t.raw = j.value("raw", "");
}

void to_json(json& j, const ExtractedArtifact& a) {
  j = json{
      {"infected_rtl", a.infected_rtl},
      {"explanation", a.explanation},
      {"taxonomy", a.taxonomy},
      {"residual_text", a.residual_text},
      {"extraction_warnings", a.extraction_warnings},
  };
}

void from_json(const json& j, ExtractedArtifact& a) {
  a.infected_rtl = j.value("infected_rtl", "");
  a.explanation = j.value("explanation", "");
  if (j.contains("taxonomy")) a.taxonomy = j.at("taxonomy").get<Taxonomy>();
  a.residual_text = j.value("residual_text", "");
  a.extraction_warnings = j.value("extraction_warnings", std::vector<std::string>{});
}

void to_json(json& j, const StageOutcome& o) {
  j = json{
      {"stage", to_string(o.stage)},
      {"passed", o.passed},
      {"tool_exit_code", o.tool_exit_code},
      {"log_path", o.log_path},
      {"diagnostics", o.diagnostics},
      {"duration_ms", o.duration.count()},
  };
}

void from_json(const json& j, StageOutcome& o) {
  o.stage = stage_from_string(j.at("stage").get<std::string>());
  o.passed = j.value("passed", false);
  o.tool_exit_code = j.value("tool_exit_code", -1);
  o.log_path = j.value("log_path", "");
  o.diagnostics = j.value("diagnostics", std::vector<std::string>{});
  o.duration = std::chrono::milliseconds(j.value("duration_ms", 0L));
}

void to_json(json& j, const EvalRecord& r) {
  json outcomes = json::object();
  for (const auto& [stage, outcome] : r.outcomes) outcomes[to_string(stage)] = outcome;
  j = json{
      {"design_id", r.design_id},
      {"ht_type", to_string(r.ht_type)},
      {"model_id", r.model_id},
      {"outcomes", outcomes},
      {"trigger_kind", to_string(r.trigger_kind)},
  };
  if (r.cell_count_free) j["cell_count_free"] = *r.cell_count_free;
  else j["cell_count_free"] = nullptr;
  if (r.cell_count_infected) j["cell_count_infected"] = *r.cell_count_infected;
  else j["cell_count_infected"] = nullptr;
}

void from_json(const json& j, EvalRecord& r) {
  r.design_id = j.value("design_id", "");
  r.ht_type = ht_type_from_string(j.at("ht_type").get<std::string>());
  r.model_id = j.value("model_id", "");
  r.outcomes.clear();
  for (const auto& [key, value] : j.at("outcomes").items())
    r.outcomes[stage_from_string(key)] = value.get<StageOutcome>();
  if (j.contains("cell_count_free") && !j.at("cell_count_free").is_null())
    r.cell_count_free = j.at("cell_count_free").get<long>();
  else
    r.cell_count_free.reset();
  if (j.contains("cell_count_infected") && !j.at("cell_count_infected").is_null())
    r.cell_count_infected = j.at("cell_count_infected").get<long>();
  else
    r.cell_count_infected.reset();
  r.trigger_kind = trigger_kind_from_string(j.value("trigger_kind", "unknown"));
}

void to_json(json& j, const DetectionOutcome& o) {
  j = json{
      {"detector_id", o.detector_id},
      {"verdict", to_string(o.verdict)},
      {"inference_time_ms", o.inference_time.count()},
  };
}

void from_json(const json& j, DetectionOutcome& o) {
  o.detector_id = j.value("detector_id", "");
  o.verdict = detection_verdict_from_string(j.value("verdict", "error"));
  o.inference_time = std::chrono::milliseconds(j.value("inference_time_ms", 0L));
}

void to_json(json& j, const BenchmarkEntry& e) {
  json files = json::array();
  for (const auto& f : e.infected_rtl) files.push_back(f.string());
  j = json{
      {"design_id", e.design_id},
      {"ht_type", to_string(e.ht_type)},
      {"model_id", e.model_id},
      {"infected_rtl", files},
      {"explanation", e.explanation},
      {"taxonomy", e.taxonomy},
      {"eval_record_ref", e.eval_record_ref},
      {"created_at", e.created_at},
  };
}

void from_json(const json& j, BenchmarkEntry& e) {
  e.design_id = j.value("design_id", "");
  e.ht_type = ht_type_from_string(j.at("ht_type").get<std::string>());
  e.model_id = j.value("model_id", "");
  e.infected_rtl.clear();
  for (const auto& f : j.value("infected_rtl", json::array()))
    e.infected_rtl.emplace_back(f.get<std::string>());
  e.explanation = j.value("explanation", "");
  if (j.contains("taxonomy")) e.taxonomy = j.at("taxonomy").get<Taxonomy>();
  e.eval_record_ref = j.value("eval_record_ref", "");
  e.created_at = j.value("created_at", "");
}

void to_json(json& j, const ComplianceVerdict& v) {
  j = json{
      {"compliant", v.compliant},
      {"llm_review_text", v.llm_review_text},
      {"static_check_failures", v.static_check_failures},
  };
}

void from_json(const json& j, ComplianceVerdict& v) {
  v.compliant = j.value("compliant", false);
  v.llm_review_text = j.value("llm_review_text", "");
  v.static_check_failures = j.value("static_check_failures", std::vector<std::string>{});
}

void to_json(json& j, const JobResult& r) {
  j = json{
      {"design_id", r.design_id},
      {"ht_type", to_string(r.ht_type)},
      {"model_id", r.model_id},
      {"artifact", r.artifact},
      {"compliance", r.compliance},
      {"modify_rounds_used", r.modify_rounds_used},
      {"status", to_string(r.status)},
      {"prompt_fingerprint", r.prompt_fingerprint},
      {"response_text", r.response_text},
      {"error", r.error},
      {"job_dir", r.job_dir},
      {"created_at", r.created_at},
      {"latency_ms", r.latency_ms},
  };
  if (r.eval_record) j["eval_record"] = *r.eval_record;
  else j["eval_record"] = nullptr;
}

void from_json(const json& j, JobResult& r) {
  r.design_id = j.value("design_id", "");
  r.ht_type = ht_type_from_string(j.at("ht_type").get<std::string>());
  r.model_id = j.value("model_id", "");
  if (j.contains("artifact")) r.artifact = j.at("artifact").get<ExtractedArtifact>();
  if (j.contains("compliance")) r.compliance = j.at("compliance").get<ComplianceVerdict>();
  r.modify_rounds_used = j.value("modify_rounds_used", 0);
  if (j.contains("eval_record") && !j.at("eval_record").is_null())
    r.eval_record = j.at("eval_record").get<EvalRecord>();
  else
    r.eval_record.reset();
  r.status = job_status_from_string(j.value("status", "generated"));
  r.prompt_fingerprint = j.value("prompt_fingerprint", "");
  r.response_text = j.value("response_text", "");
  r.error = j.value("error", "");
  r.job_dir = j.value("job_dir", "");
  r.created_at = j.value("created_at", "");
  r.latency_ms = j.value("latency_ms", 0L);
}

void to_json(json& j, const DetectionRecord& r) {
  j = json{
      {"design_id", r.design_id},
      {"ht_type", to_string(r.ht_type)},
      {"model_id", r.model_id},
      {"outcome", r.outcome},
  };
}

void from_json(const json& j, DetectionRecord& r) {
  r.design_id = j.value("design_id", "");
  r.ht_type = ht_type_from_string(j.at("ht_type").get<std::string>());
  r.model_id = j.value("model_id", "");
  if (j.contains("outcome")) r.outcome = j.at("outcome").get<DetectionOutcome>();
}

}  // namespace htlab
