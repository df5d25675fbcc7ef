#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hhmm/likelihood.hpp"
#include "hhmm/model.hpp"

// Flat parameter vector layout, priors, and the posterior energy
// E = -log L - log p. Out-of-support parameter vectors get energy +inf, which
// the samplers treat as an automatic rejection.

namespace hhmm {

enum class InitMode { Derived, Free };

enum class ParamRole { Mean, Sd, ZeroMass, TpmEntry, InitEntry };

struct ParamInfo {
    ParamRole role;
    int covariate = -1; // 0 duration, 1 max_depth, 2 wiggliness (emission roles)
    int state = -1;     // production state (emission roles)
    int chain = -1;     // production chain index; -1 means the internal chain
    int row = -1;       // t.p.m. row (TpmEntry)
    int col = -1;       // t.p.m./init column (free entries only: col < size - 1)
    std::string name;
};

// Fixed ordering of the free parameters:
//   covariate means (duration states 1..N, then max_depth, then wiggliness),
//   covariate sds in the same order, zero masses, production t.p.m. free
//   entries (chain-major, row-major, first N-1 columns), internal t.p.m. free
//   entries, then free initial-distribution entries when init_mode is Free
//   and t.p.m.s are estimated.
class ParameterSchema {
public:
    ParameterSchema(int n_production, int n_internal, bool estimate_tpms, bool free_inits);

    int dim() const { return static_cast<int>(params_.size()); }
    int n_production() const { return n_; }
    int n_internal() const { return k_; }
    bool estimate_tpms() const { return estimate_tpms_; }
    bool free_inits() const { return free_inits_; }

    const ParamInfo& info(int i) const { return params_[static_cast<std::size_t>(i)]; }
    const std::vector<ParamInfo>& params() const { return params_; }
    std::vector<std::string> names() const;

    int mean_index(int covariate, int state) const;
    int sd_index(int covariate, int state) const;
    int zero_mass_index(int state) const;
    int production_tpm_index(int chain, int row, int col) const; // col in [0, N-2]
    int internal_tpm_index(int row, int col) const;              // col in [0, K-2]
    int production_init_index(int chain, int col) const;         // col in [0, N-2]
    int internal_init_index(int col) const;                      // col in [0, K-2]

    // Free t.p.m. rows and free init vectors, each a contiguous group whose
    // implied completion entry must stay non-negative.
    struct SimplexGroup {
        std::string name;
        std::vector<int> indices;
    };
    const std::vector<SimplexGroup>& simplex_groups() const { return groups_; }

private:
    int n_ = 0;
    int k_ = 0;
    bool estimate_tpms_ = false;
    bool free_inits_ = false;
    std::vector<ParamInfo> params_;
    std::vector<SimplexGroup> groups_;
    int mean0_ = 0, sd0_ = 0, zero0_ = 0, ptpm0_ = 0, itpm0_ = 0, pinit0_ = 0, iinit0_ = 0;
};

struct PriorConfig {
    // Emission means: log-normal.
    double mean_location = std::log(100.0);
    double mean_scale = 1.0;
    // Emission sds: inverse gamma.
    double sd_shape = 1e-3;
    double sd_scale = 1e-3;
    // Zero masses: beta.
    double zero_mass_a = 1.0;
    double zero_mass_b = 1.0;
    // Free t.p.m./init entries: beta on each free entry (the completion entry
    // carries no prior term).
    double tpm_a = 0.5;
    double tpm_b = 0.5;

    void validate() const; // throws std::invalid_argument
};

// True when every entry is finite and inside its role's support, and every
// simplex group's completion is non-negative.
bool in_support(const ParameterSchema& schema, std::span<const double> theta);

// Sum of the per-parameter prior log-densities; -inf outside the support.
double log_prior(const ParameterSchema& schema, std::span<const double> theta,
                 const PriorConfig& priors);

// Per-parameter prior terms, aligned with the schema order (for tests).
std::vector<double> log_prior_components(const ParameterSchema& schema,
                                         std::span<const double> theta,
                                         const PriorConfig& priors);

// Flatten a model into schema order. The model must match the schema shape.
std::vector<double> pack_parameters(const ParameterSchema& schema, const HierarchicalModel& m);

// Rebuild a model from a parameter vector. `base` supplies everything the
// schema does not cover (fixed t.p.m.s and inits when estimate_tpms is off).
// Derived mode recomputes initial distributions from the rebuilt t.p.m.s.
// Returns nullopt when the vector is outside the support or a stationary
// distribution does not exist.
std::optional<HierarchicalModel> build_model(const ParameterSchema& schema,
                                             std::span<const double> theta,
                                             const HierarchicalModel& base,
                                             InitMode init_mode);

// Posterior energy from scratch: -hierarchical_loglik - log_prior, or +inf
// when out of support, the prior vanishes, or the likelihood is zero.
double energy(const ParameterSchema& schema, std::span<const double> theta,
              const DataSet& data, const PriorConfig& priors,
              const HierarchicalModel& base, InitMode init_mode);

} // namespace hhmm
