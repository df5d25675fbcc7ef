#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hhmm/energy.hpp"
#include "hhmm/model.hpp"
#include "hhmm/sampler.hpp"

// Experiment configuration: one structured JSON file drives simulate, fit,
// and diagnose. Unknown keys are rejected so typos cannot silently fall back
// to defaults.

namespace hhmm {

// Built-in reference parameter sets for the default 3-production-state,
// 2-internal-state model.
enum class ReferenceEstimate { Mle, Bayes };

EmissionParams reference_emissions(ReferenceEstimate which);

// Diagonally dominant defaults: production rows put 0.9 on the diagonal with
// the remainder split evenly; the internal matrix uses 0.95.
TransitionMatrix default_production_tpm(int n);
TransitionMatrix default_internal_tpm(int k);

// Reference emissions plus the default t.p.m.s, inits derived.
HierarchicalModel reference_model(ReferenceEstimate which);

enum class SamplerMode { Single, BlockByVariable, BlockByParameter, Pt };

struct ModelConfig {
    int n_production = 3;
    int n_internal = 2;
    InitMode init_mode = InitMode::Derived;
};

struct SimulationConfig {
    HierarchicalModel ground_truth;
    int n_frames = 50;
    std::vector<int> dives_per_frame{60};
    std::uint64_t seed = 1;
};

struct SamplerConfig {
    SamplerMode mode = SamplerMode::Single;
    ScheduleMode pt_schedule = ScheduleMode::Single; // within-chain schedule for pt
    long iterations = 16000;
    long burn_in = 6000;
    int tune_interval = 100;
    bool tpm_estimation = false;
    // nullopt: ground truth with emission entries rounded to 1 decimal.
    std::optional<HierarchicalModel> initial_model;
    // Scales: the defaults rule, optionally overridden uniformly or per name.
    std::optional<double> uniform_scale;
    std::map<std::string, double> scale_overrides;
};

struct TemperingConfig {
    std::vector<double> ladder{1.0, 0.75, 0.5, 0.25};
    long cycle_length = 100;
    long num_cycles = 160;
    bool parallel = true;
};

struct DiagnoseConfig {
    int max_lag = 100;
    std::optional<long> burn_in; // overrides the trace's own burn-in
};

struct ExperimentConfig {
    ModelConfig model;
    std::optional<SimulationConfig> simulation;
    PriorConfig priors;
    SamplerConfig sampler;
    TemperingConfig tempering;
    DiagnoseConfig diagnose;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::optional<std::string> data_path;
    std::string config_hash; // hash of the file bytes, filled by load_config
};

// Parses and validates; throws std::runtime_error with the offending key on
// malformed input.
ExperimentConfig load_config(const std::string& path);

// Initial point: the explicit model when given, otherwise `truth` with every
// emission entry rounded to one decimal (t.p.m. and init entries stay exact;
// rounding those can produce reducible chains with no stationary
// distribution).
std::vector<double> initial_theta(const ParameterSchema& schema, const HierarchicalModel& truth,
                                  const std::optional<HierarchicalModel>& explicit_model);

// Proposal-scale defaults: the tuned per-parameter values for the reference
// model shape (N = 3), otherwise 0.1 * |theta0| + 0.01; t.p.m. and init
// entries always use the fallback rule.
std::vector<double> default_scales(const ParameterSchema& schema,
                                   std::span<const double> theta0);

} // namespace hhmm
