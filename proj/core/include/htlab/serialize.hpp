// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "htlab/corpus.hpp"
#include "htlab/extract.hpp"
#include "htlab/gauntlet.hpp"
#include "htlab/metrics.hpp"
#include "htlab/orchestrator.hpp"
#include "json.hpp"

namespace htlab {

// nlohmann ADL hooks. Keys are stable and objects serialize with sorted
// keys, so identical values always produce identical bytes.

void to_json(nlohmann::json& j, const Taxonomy& t);
void from_json(const nlohmann::json& j, Taxonomy& t);

void to_json(nlohmann::json& j, const ExtractedArtifact& a);
void from_json(const nlohmann::json& j, ExtractedArtifact& a);

void to_json(nlohmann::json& j, const StageOutcome& o);
void from_json(const nlohmann::json& j, StageOutcome& o);

void to_json(nlohmann::json& j, const EvalRecord& r);
void from_json(const nlohmann::json& j, EvalRecord& r);

void to_json(nlohmann::json& j, const DetectionOutcome& o);
void from_json(const nlohmann::json& j, DetectionOutcome& o);

void to_json(nlohmann::json& j, const BenchmarkEntry& e);
void from_json(const nlohmann::json& j, BenchmarkEntry& e);

void to_json(nlohmann::json& j, const ComplianceVerdict& v);
void from_json(const nlohmann::json& j, ComplianceVerdict& v);

void to_json(nlohmann::json& j, const JobResult& r);
void from_json(const nlohmann::json& j, JobResult& r);

void to_json(nlohmann::json& j, const DetectionRecord& r);
void from_json(const nlohmann::json& j, DetectionRecord& r);

}  // namespace htlab
