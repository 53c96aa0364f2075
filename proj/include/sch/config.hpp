#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sch {

enum class Preset { test1_temporal, test1_spatial, test2, test3, custom };
enum class Study { temporal, spatial, interface_evolution };
enum class SkipPolicy { abort, skip_and_count };
enum class ReferencePolicy { fine_tau_same_h, fine_h_same_tau };

struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& msg)
        : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

struct ExperimentConfig {
    Preset preset = Preset::custom;
    Study study = Study::temporal;

    double epsilon = 0.1;
    double delta = 0.0;
    double T = 0.016;
    double tau_ref = 5e-5;
    std::vector<double> tau_list;   // temporal ladder, decreasing by factor 2
    std::vector<int> n_list;        // spatial ladder (subdivisions), doubling
    int n_ref = 32;                 // mesh (temporal/interface) or reference mesh (spatial)
    double tau = 2e-4;              // step for spatial/interface studies

    int M = 100;
    std::uint64_t master_seed = 1;
    ReferencePolicy reference_policy = ReferencePolicy::fine_tau_same_h;
    SkipPolicy skip_policy = SkipPolicy::skip_and_count;
    int jobs = 0;                   // 0 = hardware concurrency

    double newton_tol = 1e-10;
    int newton_max_iter = 25;
    double mesh_warn_threshold = 1.0;
    int quad_order = 4;

    std::vector<double> snapshot_times;
    std::string initial_data = "test1_poly";   // test1_poly | test2_ellipse |
                                               // test3_two_ellipses | constant:<c>
    std::string out_dir = "out";
};

ExperimentConfig preset_config(Preset p);
Preset parse_preset_name(const std::string& name);   // accepts test1-temporal etc.

// Flat key=value file ('#' comments); a preset key, when present, seeds the
// defaults and the remaining keys override it.
ExperimentConfig load_config_file(const std::string& path);

// Shrinks a config to a smoke-test scale.
void apply_quick(ExperimentConfig& cfg);

// Throws ConfigError naming the offending field.
void validate_config(const ExperimentConfig& cfg);

// Canonical key=value serialization (fixed key order, %.17g); every default is
// materialized so no silent defaults exist.
std::string serialize_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);   // fnv1a-64 hex

std::uint64_t fnv1a64(const void* data, std::size_t len);

const char* to_string(Preset p);
const char* to_string(Study s);
const char* to_string(SkipPolicy s);
const char* to_string(ReferencePolicy r);

} // namespace sch
