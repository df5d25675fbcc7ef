#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

// Trace storage and posterior summaries: autocorrelation, effective sample
// size, moments, and percentiles.

namespace hhmm {

// One chain's recorded sweeps. Columns are parameters in schema order; the
// energy series is stored alongside. burn_in marks how many leading sweeps
// summaries discard.
struct Trace {
    std::vector<std::string> names;           // parameter names, no energy
    std::vector<std::vector<double>> columns; // [param][sweep]
    std::vector<double> energy;               // [sweep]
    long burn_in = 0;
    // Free-form provenance (mode, seed, ladder, hashes); order is preserved
    // into the trace file.
    std::vector<std::pair<std::string, std::string>> metadata;

    long n_sweeps() const { return static_cast<long>(energy.size()); }
    void validate() const; // column lengths consistent; throws std::invalid_argument
};

// Autocorrelation at lags 1..max_lag with the biased 1/T normalisation
// (guarantees |rho| <= 1). Requires max_lag >= 1 and series longer than
// max_lag; throws std::domain_error on a constant series.
std::vector<double> acf(std::span<const double> series, int max_lag);

// T / (1 + 2 sum rho_l), truncating the sum at the first non-positive
// autocorrelation. Same preconditions as acf.
double ess(std::span<const double> series);

// accepted / proposed as a double; proposed must be positive.
double acceptance_fraction(long accepted, long proposed);

// p-th percentile (0..100) with linear interpolation between order statistics;
// `sorted` must be ascending and non-empty.
double percentile(std::span<const double> sorted, double p);

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0; // sample sd, n-1 denominator
    double p2 = 0.0, p50 = 0.0, p98 = 0.0;
};

struct PosteriorSummary {
    std::vector<ParamSummary> rows; // parameters in trace order, then energy
};

// Post-burn-in summary of every column and the energy. Throws
// std::invalid_argument when burn-in leaves nothing.
PosteriorSummary summarize(const Trace& trace);

} // namespace hhmm
