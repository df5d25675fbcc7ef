#include "hhmm/simulator.hpp"

#include <stdexcept>

#include "hhmm/rng.hpp"

namespace hhmm {

void SimConfig::validate() const {
    model.validate();
    if (n_frames < 1)
        throw std::invalid_argument("SimConfig: n_frames must be >= 1");
    if (dives_per_frame.empty())
        throw std::invalid_argument("SimConfig: dives_per_frame must not be empty");
    if (dives_per_frame.size() != 1
        && dives_per_frame.size() != static_cast<std::size_t>(n_frames))
        throw std::invalid_argument("SimConfig: dives_per_frame must have length 1 or n_frames");
    for (int t : dives_per_frame)
        if (t < 1)
            throw std::invalid_argument("SimConfig: every frame needs at least one dive");
}

SimOutput simulate(const SimConfig& cfg) {
    cfg.validate();
    RngStream rng(cfg.seed, 0);
    const HierarchicalModel& m = cfg.model;
    const int n_k = m.n_internal();
    const int n_s = m.n_production();
    (void)n_k;
    (void)n_s;

    SimOutput out;
    out.data.frames.reserve(static_cast<std::size_t>(cfg.n_frames));
    out.internal_states.reserve(static_cast<std::size_t>(cfg.n_frames));
    out.dive_states.reserve(static_cast<std::size_t>(cfg.n_frames));

    int internal = -1;
    for (int frame = 0; frame < cfg.n_frames; ++frame) {
        internal = frame == 0 ? rng.categorical(m.internal_init.probs())
                              : rng.categorical(m.internal_tpm.row(internal));
        out.internal_states.push_back(internal);

        const TransitionMatrix& tpm = m.production_tpms[static_cast<std::size_t>(internal)];
        const StationaryDist& init = m.production_inits[static_cast<std::size_t>(internal)];
        const int t_len = cfg.dives_per_frame.size() == 1
                              ? cfg.dives_per_frame[0]
                              : cfg.dives_per_frame[static_cast<std::size_t>(frame)];

        DiveFrame df;
        df.dives.reserve(static_cast<std::size_t>(t_len));
        std::vector<int> states;
        states.reserve(static_cast<std::size_t>(t_len));
        // Production chains restart from their initial distribution each frame.
        int state = -1;
        for (int t = 0; t < t_len; ++t) {
            state = t == 0 ? rng.categorical(init.probs()) : rng.categorical(tpm.row(state));
            states.push_back(state);

            const StateEmission& e = m.emissions.states[static_cast<std::size_t>(state)];
            const auto [dur_shape, dur_rate] = gamma_shape_rate(e.duration);
            const auto [dep_shape, dep_rate] = gamma_shape_rate(e.max_depth);
            CovariateTriple y;
            y.duration = rng.gamma(dur_shape, 1.0 / dur_rate);
            y.max_depth = rng.gamma(dep_shape, 1.0 / dep_rate);
            // Zero inflation: the point mass fires first, otherwise the gamma.
            if (rng.uniform() < e.zero_mass) {
                y.wiggliness = 0.0;
            } else {
                const auto [wig_shape, wig_rate] = gamma_shape_rate(e.wiggliness);
                y.wiggliness = rng.gamma(wig_shape, 1.0 / wig_rate);
            }
            y.validate();
            df.dives.push_back(y);
        }
        out.data.frames.push_back(std::move(df));
        out.dive_states.push_back(std::move(states));
    }
    out.data.validate();
    return out;
}

} // namespace hhmm
