#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlab/spectrum.hpp"

namespace tlab {

enum class RunKind { field_cov, tracer_sim, hurst, diagrams, moments, limit_sim, rosenblatt_check, report };

RunKind parse_run_kind(const std::string& s);
std::string run_kind_name(RunKind k);

struct ExperimentConfig {
    RunKind kind = RunKind::diagrams;
    KeyValues kv;  // params.* plus <kind>.* budgets; unknown keys are a config error
    uint64_t seed = 1;
    int workers = 1;
    std::string out_dir;               // empty: runs/<run id>
    std::vector<std::string> inputs;   // report: run directories
};

// Reads a key=value file; "[section]" lines prefix the following keys with "section.".
KeyValues load_config_file(const std::string& path);
KeyValues parse_config_text(const std::string& text);

struct RunOutcome {
    nlohmann::json manifest;
    nlohmann::json payload;  // what the CLI prints (census, report summary, headline numbers)
    std::string out_dir;
    bool pass = true;        // AND of mandatory verdicts
};

// Validates everything up front (ErrorKind::config / param on bad input), then runs and
// writes CSV + JSON artifacts and manifest.json into the output directory.
RunOutcome run_experiment(const ExperimentConfig& cfg);

// FNV-1a 64 of the resolved configuration (kind, seed, every key with its effective value).
uint64_t fnv1a64(const std::string& s);
std::string hex64(uint64_t v);

// Consolidates manifests from run directories (a directory holding manifest.json, or
// whose immediate subdirectories do). Duplicate run ids keep the newest timestamp;
// unreadable or incomplete manifests are listed and excluded.
nlohmann::json aggregate_manifests(const std::vector<std::string>& dirs, std::string* summary = nullptr);

}  // namespace tlab
