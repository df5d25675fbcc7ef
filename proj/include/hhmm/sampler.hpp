#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hhmm/diagnostics.hpp"
#include "hhmm/energy.hpp"
#include "hhmm/rng.hpp"
#include "hhmm/target.hpp"

// Random-walk Metropolis-Hastings over an energy target, blockwise, with
// pilot tuning of per-parameter proposal scales during burn-in.
//
// RNG consumption per block move is fixed: one standard normal per block
// index, then one uniform, drawn even when the move auto-rejects. This is
// what makes tempered chains with the same stream reproduce each other.

namespace hhmm {

// min(1, exp(-beta * (proposed - current))) with the conventions: equal
// energies (including +inf vs +inf) accept with probability 1, and a +inf
// proposal from a finite point never accepts.
double tempered_accept_probability(double current_energy, double proposed_energy, double beta);

struct SamplerControl {
    long iterations = 10000;
    long burn_in = 0;
    int tune_interval = 100; // sweeps between pilot adjustments
    bool tune = true;
    double accept_low = 0.25;  // shrink below this window fraction
    double accept_high = 0.40; // grow above it
    double scale_grow = 1.1;
    double scale_shrink = 0.9;

    void validate() const; // throws std::invalid_argument
};

struct BlockStats {
    std::string name;
    // Current tuning window (reset at every pilot adjustment).
    long window_accepted = 0;
    long window_proposed = 0;
    // Cumulative tallies; reset once when burn-in ends, so after a full run
    // they cover exactly the post-burn-in sweeps.
    long accepted = 0;
    long proposed = 0;
    double last_window_fraction = -1.0; // fraction at the most recent adjustment
};

struct ChainResult {
    Trace trace;
    std::vector<BlockStats> blocks;
    std::vector<double> final_scales;
    std::vector<double> final_theta;
    double final_energy = 0.0;
};

// One tempered chain. Exposed (rather than hidden behind run_chain) because
// parallel tempering advances several of these in lockstep and swaps their
// states at cycle boundaries.
class ChainRunner {
public:
    // Throws std::invalid_argument on dimension or control errors and
    // std::domain_error when theta0 has non-finite energy (a chain must start
    // inside the support of its target).
    ChainRunner(std::unique_ptr<EnergyTarget> target, Layout layout,
                std::vector<double> theta0, std::vector<double> scales0,
                SamplerControl control, double beta, RngStream rng,
                std::vector<std::string> names);

    void advance(long n_sweeps);
    long sweeps_done() const { return sweep_; }
    double energy() const { return energy_; }
    double beta() const { return beta_; }
    std::span<const double> theta() const { return theta_; }
    std::span<const double> scales() const { return scales_; }
    const std::vector<BlockStats>& blocks() const { return stats_; }

    // Exchanges the chain states (parameters, energy, and the target holding
    // the matching caches). Proposal scales and tallies stay with the rung.
    void swap_state_with(ChainRunner& other);

    ChainResult take_result();

private:
    void sweep_once();
    void block_move(std::size_t bi);
    void pilot_adjust();

    std::unique_ptr<EnergyTarget> target_;
    Layout layout_;
    SamplerControl control_;
    double beta_;
    RngStream rng_;
    std::vector<double> theta_, scales_, prop_;
    double energy_;
    long sweep_ = 0;
    std::vector<BlockStats> stats_;
    Trace trace_;
};

// Runs a single chain at the given inverse temperature (1.0 for the plain
// sampler) and returns its trace and tallies.
ChainResult run_chain(std::unique_ptr<EnergyTarget> target, Layout layout,
                      std::vector<double> theta0, std::vector<double> scales0,
                      const SamplerControl& control, double beta, RngStream rng,
                      std::vector<std::string> names);

// Update schedules over a parameter schema.
enum class ScheduleMode {
    Single,           // one block per emission scalar
    BlockByVariable,  // per covariate: means block then sds block
    BlockByParameter, // all means blocks first, then all sds blocks
};

// Builds the block layout for a schedule; simplex rows (t.p.m. and free init
// groups) always form their own blocks at the end.
Layout make_layout(const ParameterSchema& schema, ScheduleMode mode);

} // namespace hhmm
