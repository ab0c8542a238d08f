#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "flowguard/features.hpp"
#include "flowguard/ingest.hpp"
#include "flowguard/labels.hpp"
#include "flowguard/models.hpp"
#include "flowguard/synth.hpp"
#include "flowguard/training.hpp"
#include "flowguard/windowing.hpp"

namespace flowguard {

struct PathConfig {
    /// Production table; empty means the output of `synth` in the output dir.
    std::string data;
    /// Topology table; empty means the output of `synth` in the output dir.
    std::string topology;
    std::string output_dir = "flowguard-out";
};

/// Everything a pipeline run depends on. Serialized as nested JSON objects
/// whose key paths mirror the member names (e.g. "training.lr").
struct RunConfig {
    PathConfig paths;
    ColumnMap columns;
    ImputePolicy impute;
    FeatureConfig features;
    RuleConfig rules;
    int window = 14;
    SplitSpec split;
    ModelConfig model;
    TrainConfig training;
    double threshold = 0.5;
    SynthConfig synth;
    std::uint64_t seed = 0;
    unsigned jobs = 1;

    /// Throws ConfigError naming the offending key path.
    void validate() const;
};

/// Parses a JSON document on top of the defaults, then applies "key.path=value"
/// overrides (values are read as JSON, falling back to a plain string).
/// Unknown keys and type errors raise ConfigError naming the key path.
[[nodiscard]] RunConfig parse_config(std::string_view json_text, std::span<const std::string> overrides = {});

/// Canonical JSON (sorted keys, two-space indent).
[[nodiscard]] std::string config_to_json(const RunConfig& cfg);

/// SHA-256 of the canonical JSON with the settings that cannot change results
/// (output directory, job count) removed.
[[nodiscard]] std::string config_fingerprint(const RunConfig& cfg);

}  // namespace flowguard
