#include "hhmm/tempering.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace hhmm {

Ladder::Ladder(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty())
        throw std::invalid_argument("Ladder: no temperatures");
    if (betas_.front() != 1.0)
        throw std::invalid_argument("Ladder: first temperature must be exactly 1");
    for (std::size_t j = 0; j < betas_.size(); ++j) {
        if (!(betas_[j] > 0.0 && betas_[j] <= 1.0))
            throw std::invalid_argument("Ladder: temperatures must lie in (0, 1]");
        if (j > 0 && !(betas_[j] < betas_[j - 1]))
            throw std::invalid_argument("Ladder: temperatures must be strictly decreasing");
    }
}

Ladder Ladder::evenly_spaced(int n_chains, double beta_min) {
    if (n_chains < 2)
        throw std::invalid_argument("Ladder::evenly_spaced: need at least 2 chains");
    if (!(beta_min > 0.0 && beta_min < 1.0))
        throw std::invalid_argument("Ladder::evenly_spaced: beta_min outside (0, 1)");
    std::vector<double> betas(static_cast<std::size_t>(n_chains));
    for (int j = 0; j < n_chains; ++j)
        betas[static_cast<std::size_t>(j)] =
            1.0 - static_cast<double>(j) * (1.0 - beta_min) / static_cast<double>(n_chains - 1);
    betas.front() = 1.0;
    betas.back() = beta_min;
    return Ladder(std::move(betas));
}

void SwapSchedule::validate() const {
    if (cycle_length < 1 || num_cycles < 1)
        throw std::invalid_argument("SwapSchedule: cycle_length and num_cycles must be >= 1");
}

double swap_probability(double energy_j, double energy_jm1, double beta_j, double beta_jm1) {
    if (energy_j == energy_jm1)
        return 1.0;
    const double x = (beta_j - beta_jm1) * (energy_j - energy_jm1);
    if (x <= 0.0)
        return 1.0;
    return std::exp(-x);
}

void swap_sweep(std::vector<ChainRunner>& chains, long cycle, RngStream& swap_rng,
                std::vector<SwapRecord>& records) {
    for (std::size_t j = 1; j < chains.size(); ++j) {
        ChainRunner& colder = chains[j - 1];
        ChainRunner& hotter = chains[j];
        SwapRecord rec;
        rec.cycle = cycle;
        rec.lower = static_cast<int>(j) - 1;
        rec.upper = static_cast<int>(j);
        rec.delta_beta = hotter.beta() - colder.beta();
        rec.delta_energy =
            hotter.energy() == colder.energy() ? 0.0 : hotter.energy() - colder.energy();
        rec.probability =
            swap_probability(hotter.energy(), colder.energy(), hotter.beta(), colder.beta());
        const double u = swap_rng.uniform(); // consumed even when p == 1
        rec.accepted = u < rec.probability;
        if (rec.accepted)
            colder.swap_state_with(hotter);
        records.push_back(rec);
    }
}

TemperingResult run_parallel_tempering(const TargetFactory& make_target, const Layout& layout,
                                       const std::vector<double>& theta0,
                                       const std::vector<double>& scales0,
                                       const SamplerControl& control, const Ladder& ladder,
                                       const SwapSchedule& schedule, std::uint64_t seed,
                                       bool parallel, const std::vector<std::string>& names) {
    schedule.validate();
    SamplerControl per_chain = control;
    per_chain.iterations = schedule.total_sweeps();
    per_chain.validate();

    std::vector<ChainRunner> chains;
    chains.reserve(static_cast<std::size_t>(ladder.size()));
    for (int j = 0; j < ladder.size(); ++j) {
        std::unique_ptr<EnergyTarget> target = make_target();
        if (!target)
            throw std::invalid_argument("run_parallel_tempering: factory returned null");
        chains.emplace_back(std::move(target), layout, theta0, scales0, per_chain, ladder[j],
                            RngStream(seed, static_cast<std::uint64_t>(j)), names);
    }
    RngStream swap_rng(seed, kSwapStreamId);

    TemperingResult out;
    for (long cycle = 1; cycle <= schedule.num_cycles; ++cycle) {
        if (parallel && chains.size() > 1) {
            std::vector<std::thread> workers;
            workers.reserve(chains.size());
            for (ChainRunner& c : chains)
                workers.emplace_back([&c, &schedule] { c.advance(schedule.cycle_length); });
            for (std::thread& w : workers)
                w.join();
        } else {
            for (ChainRunner& c : chains)
                c.advance(schedule.cycle_length);
        }
        swap_sweep(chains, cycle, swap_rng, out.swaps);
    }

    out.chains.reserve(chains.size());
    for (ChainRunner& c : chains)
        out.chains.push_back(c.take_result());
    return out;
}

} // namespace hhmm
