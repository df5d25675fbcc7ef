#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace hhmm {

// Stream id reserved for replica-swap decisions; chain streams use their chain index,
// which can never reach this value.
inline constexpr std::uint64_t kSwapStreamId = ~std::uint64_t{0};

// Seeded random stream with hand-rolled variate generation.
//
// All draws are built from raw mt19937_64 output so that a (master_seed, stream_id)
// pair reproduces the same sequence on any platform, independent of standard-library
// distribution internals. Consumption per call is fixed where samplers rely on it:
// uniform() eats 1 engine step, normal() eats exactly 2 (Box-Muller, no caching).
// gamma() uses rejection and therefore has variable consumption; it is only used by
// the simulator, never inside a sampler move.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    // Uniform on [0, 1): 53 random bits scaled by 2^-53.
    double uniform();

    // Standard normal via Box-Muller, always consuming two uniforms.
    double normal();

    // Gamma(shape, scale) by Marsaglia-Tsang squeeze, shape < 1 boosted through
    // Gamma(shape + 1). Requires shape > 0, scale > 0.
    double gamma(double shape, double scale);

    // Index i with probability probs[i] / sum(probs). Probabilities must be
    // non-negative with a positive sum.
    int categorical(std::span<const double> probs);

private:
    std::mt19937_64 engine_;
};

} // namespace hhmm
