#pragma once

#include <span>
#include <vector>

#include "hhmm/model.hpp"

// Likelihood evaluation for the two-level model.
//
// Fast paths run a scaled forward recursion (log-space accumulation with a
// per-step max shift), so they stay finite for sequences whose raw likelihood
// underflows double precision. Oracle paths enumerate state sequences and
// exist to pin the fast paths down in tests; they refuse instances whose
// enumeration would be unreasonably large.

namespace hhmm {

// Enumeration guards: production N^T and internal K^M must not exceed these.
inline constexpr double kMaxProductionEnumeration = 1e7;
inline constexpr double kMaxInternalEnumeration = 1e5;

// One hour-frame of dives, ordered within the frame.
struct DiveFrame {
    std::vector<CovariateTriple> dives;
};

struct DataSet {
    std::vector<DiveFrame> frames;

    int n_frames() const { return static_cast<int>(frames.size()); }
    int total_dives() const;
    void validate() const; // non-empty frames, valid covariates; throws std::invalid_argument
};

// log f(y | state): product of the duration and depth gamma densities and the
// zero-inflated wiggliness density.
double log_emission(const CovariateTriple& y, int state, const EmissionParams& params);

// log-likelihood of one frame under a single production chain.
double production_loglik(const DiveFrame& frame, const TransitionMatrix& tpm,
                         const StationaryDist& init, const EmissionParams& params);

// Same quantity by brute-force summation over all N^T state sequences.
// Throws std::domain_error when N^T exceeds kMaxProductionEnumeration.
double production_loglik_oracle(const DiveFrame& frame, const TransitionMatrix& tpm,
                                const StationaryDist& init, const EmissionParams& params);

// Marginal log-likelihood of the full data set: an outer forward pass over
// internal states where frame m in internal state k contributes
// exp(production_loglik(frame_m under chain k)).
double hierarchical_loglik(const DataSet& data, const HierarchicalModel& model);

// Same quantity enumerating all K^M internal sequences, with each frame term
// computed by the production oracle. Throws std::domain_error when K^M or any
// frame's N^T exceeds its enumeration guard.
double hierarchical_loglik_oracle(const DataSet& data, const HierarchicalModel& model);

// Shared forward recursion: log sum over paths of init * prod(tpm steps) *
// prod(exp(log_dens)), where log_dens[t] spans the states at step t.
double forward_loglik(std::span<const std::vector<double>> log_dens,
                      const TransitionMatrix& tpm, const StationaryDist& init);

} // namespace hhmm
