#pragma once

#include <map>
#include <string>

#include "specfi/corpus.hpp"
#include "specfi/pipeline.hpp"

namespace specfi {

// Timestamp-free run artifact: byte-identical across executions for a fixed
// config and seed. Timings and timestamps live in the separate manifest.
std::string run_artifact_json(const PipelineConfig& config, const std::string& dataset_name,
                              const RunOutput& output);

struct RunManifest {
    std::string config_digest;
    std::string dataset_name;
    std::string variant;
    std::uint64_t base_seed = 0;
    std::string started_at;
    std::string finished_at;
    std::map<std::string, double> stage_seconds;
    double seconds_per_narrative = 0.0;
    bool valid = true;
};

std::string manifest_json(const RunManifest& manifest);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Deterministic clustered corpus used by the mock experiments and tests:
// six narratives with cluster-specific vocabulary that appears in the
// reference texts but not in the query descriptions.
Dataset synthetic_dataset();
std::vector<TaxonomyEntry> synthetic_taxonomy();

}  // namespace specfi
