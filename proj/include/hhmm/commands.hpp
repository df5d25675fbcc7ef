#pragma once

#include <memory>
#include <optional>
#include <string>

#include "hhmm/config.hpp"
#include "hhmm/posterior.hpp"
#include "hhmm/sampler.hpp"
#include "hhmm/tempering.hpp"

// The three CLI commands as library functions (the binary is a thin argument
// parser over these), plus the fit assembly helpers tests drive directly.

namespace hhmm {

struct CliOverrides {
    std::optional<std::string> data;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

// Everything a sampling run needs, assembled from a config and a data set.
struct FitSetup {
    ParameterSchema schema;
    Layout layout;
    std::vector<double> theta0;
    std::vector<double> scales0;
    std::vector<std::string> names;
    HierarchicalModel base; // ground truth: fixed t.p.m.s / inits, rounding source
    std::shared_ptr<const PreparedData> data;
    PriorConfig priors;
    InitMode init_mode = InitMode::Derived;
    SamplerControl control;
};

// Throws std::runtime_error when the config lacks what a fit needs (the
// simulation ground truth defines the model structure).
FitSetup make_fit_setup(const ExperimentConfig& cfg, const DataSet& data);

// Fresh evaluator owning nothing but a reference to the shared data.
std::unique_ptr<EnergyTarget> make_posterior_target(const FitSetup& setup);

// Exit code 0 on success; errors go to stderr and return 1.
int cmd_simulate(const std::string& config_path, const CliOverrides& overrides);
int cmd_fit(const std::string& config_path, const CliOverrides& overrides);
int cmd_diagnose(const std::string& config_path, const CliOverrides& overrides);

} // namespace hhmm
