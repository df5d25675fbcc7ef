#pragma once

#include <cstdint>
#include <vector>

#include "hhmm/likelihood.hpp"
#include "hhmm/model.hpp"

// Data generator for the two-level model. Initial states draw from the
// model's initial distributions; outputs are deterministic in the seed.

namespace hhmm {

struct SimConfig {
    HierarchicalModel model;
    int n_frames = 50;
    std::vector<int> dives_per_frame; // length 1 (constant) or n_frames
    std::uint64_t seed = 1;

    void validate() const; // throws std::invalid_argument
};

struct SimOutput {
    DataSet data;
    std::vector<int> internal_states;           // [frame], 0-based
    std::vector<std::vector<int>> dive_states;  // [frame][dive], 0-based
};

SimOutput simulate(const SimConfig& cfg);

} // namespace hhmm
