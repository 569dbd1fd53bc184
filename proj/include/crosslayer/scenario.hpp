// Scenario layer: named presets, INI-style config files with overrides,
// canonical config hashing, and the run/sweep drivers that write result files.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crosslayer/sim_engine.hpp"

namespace crosslayer {

struct ScenarioConfig {
    std::string name = "custom";
    SimConfig sim;
};

// Built-in scenarios; throws ConfigError for an unknown name.
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// Parse an INI-style file: `[section]` headers, `key = value` lines, `#` or
// `;` comments. Keys are section-qualified ("apd.smoothing"); keys in the
// top-level/[sim] section stay bare ("clients"). Throws ConfigError naming the
// offending key or line.
ScenarioConfig load_config_file(const std::string& path);

// Apply one "key=value" override (same key space as config files).
void apply_override(ScenarioConfig& cfg, const std::string& assignment);

// Deterministic flat rendering of every effective setting, one per line.
std::string canonical_config(const ScenarioConfig& cfg);

// FNV-1a 64-bit hash of the canonical rendering.
std::uint64_t config_hash(const ScenarioConfig& cfg);

// CROSSLAYER_LOG env var: off (default) -> 0, summary -> 1, trace -> 2.
int log_level_from_env();

// Run one scenario and write report.json, metrics.csv, and tcp_trace.csv
// into out_dir (each written to a temp file, then renamed).
MetricsReport run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

struct SweepPoint {
    std::string label;
    ScenarioConfig cfg;
};

// Points for a sweep dimension: "clients" {8,12,16,20} (uplink RBs scale to
// half the downlink count), "dl_rbs" {16,18,20,22}, or "guard_time"
// {0,0.5,...,3.0}. Throws ConfigError for an unknown dimension.
std::vector<SweepPoint> sweep_points(const ScenarioConfig& base, const std::string& dimension);

// Run every point with `seeds` consecutive seeds and append rows to
// out_dir/sweep.csv: point,dl_sched,ul_sched,apd,seed,system_kbps,rebuffer_s,mean_qr.
void run_sweep(const ScenarioConfig& base, const std::string& dimension, int seeds,
               const std::string& out_dir);

} // namespace crosslayer
