#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hhmm/sampler.hpp"

// Parallel tempering: J replicas at inverse temperatures 1 = beta_1 > ... >
// beta_J > 0 advance independently for a fixed number of sweeps, then adjacent
// pairs attempt a state swap, coldest pair first. Swap decisions draw from a
// dedicated RNG stream so chain streams stay untouched by the cadence.

namespace hhmm {

class Ladder {
public:
    // Explicit temperatures: first entry exactly 1, strictly decreasing,
    // all in (0, 1]. A single entry gives plain MH.
    explicit Ladder(std::vector<double> betas);

    // J evenly spaced temperatures from 1 down to beta_min; requires J >= 2
    // and beta_min in (0, 1).
    static Ladder evenly_spaced(int n_chains, double beta_min);

    int size() const { return static_cast<int>(betas_.size()); }
    double operator[](int j) const { return betas_[static_cast<std::size_t>(j)]; }
    const std::vector<double>& betas() const { return betas_; }

private:
    std::vector<double> betas_;
};

struct SwapSchedule {
    long cycle_length = 100; // sweeps between swap attempts
    long num_cycles = 160;

    long total_sweeps() const { return cycle_length * num_cycles; }
    void validate() const; // throws std::invalid_argument
};

// min(1, exp(-(beta_j - beta_jm1) * (energy_j - energy_jm1))) for the adjacent
// pair (j-1, j); equal energies swap with probability 1.
double swap_probability(double energy_j, double energy_jm1, double beta_j, double beta_jm1);

struct SwapRecord {
    long cycle = 0;  // 1-based swap sweep index
    int lower = 0;   // colder chain index (j-1)
    int upper = 0;   // hotter chain index (j)
    double delta_energy = 0.0; // E_j - E_jm1 at attempt time
    double delta_beta = 0.0;   // beta_j - beta_jm1
    double probability = 0.0;
    bool accepted = false;
};

// One pass of adjacent-pair swap attempts over already-advanced chains,
// coldest pair first. Consumes exactly J-1 uniforms from swap_rng.
void swap_sweep(std::vector<ChainRunner>& chains, long cycle, RngStream& swap_rng,
                std::vector<SwapRecord>& records);

struct TemperingResult {
    std::vector<ChainResult> chains; // index 0 is the beta = 1 chain
    std::vector<SwapRecord> swaps;
};

using TargetFactory = std::function<std::unique_ptr<EnergyTarget>()>;

// Runs the full tempering cycle. Chain j draws from stream j of `seed`
// (chain 0 therefore reproduces run_chain with stream 0 when J = 1); swap
// decisions draw from the reserved swap stream. With `parallel` set, chains
// advance on separate threads between swap barriers; results are bit-identical
// either way. `control.iterations` is ignored in favour of the schedule.
TemperingResult run_parallel_tempering(const TargetFactory& make_target, const Layout& layout,
                                       const std::vector<double>& theta0,
                                       const std::vector<double>& scales0,
                                       const SamplerControl& control, const Ladder& ladder,
                                       const SwapSchedule& schedule, std::uint64_t seed,
                                       bool parallel, const std::vector<std::string>& names);

} // namespace hhmm
