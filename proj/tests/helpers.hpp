#pragma once

#include <cmath>
#include <vector>

#include "hhmm/config.hpp"
#include "hhmm/likelihood.hpp"
#include "hhmm/model.hpp"
#include "hhmm/rng.hpp"

// Shared fixtures and random-instance builders for the test suite.

namespace hhmm::test {

inline bool close(double actual, double expected, double tol = 1e-9) {
    if (std::isinf(actual) || std::isinf(expected))
        return actual == expected;
    return std::abs(actual - expected) <= tol * std::max(1.0, std::abs(expected));
}

// Two frames of three dives each; the second dive of frame 1 has zero
// wiggliness. Expected values in the tests were computed independently.
inline DataSet tiny_dataset() {
    DataSet d;
    d.frames.push_back({{{30.0, 10.0, 5.0}, {5.0, 3.0, 0.0}, {100.0, 40.0, 50.0}}});
    d.frames.push_back({{{33.0, 14.0, 9.0}, {6.5, 4.0, 1.2}, {110.0, 35.0, 40.0}}});
    return d;
}

inline TransitionMatrix tiny_ptpm2() {
    return TransitionMatrix(3, {0.8, 0.15, 0.05, 0.1, 0.8, 0.1, 0.05, 0.15, 0.8});
}

// Reference emissions, default chain-1 t.p.m., a contrasting chain-2 t.p.m.,
// an asymmetric internal matrix; inits derived.
inline HierarchicalModel tiny_model() {
    return make_hierarchical_model(TransitionMatrix(2, {0.95, 0.05, 0.1, 0.9}),
                                   {default_production_tpm(3), tiny_ptpm2()},
                                   reference_emissions(ReferenceEstimate::Mle));
}

// Strictly positive random row-stochastic matrix.
inline TransitionMatrix random_tpm(RngStream& rng, int n) {
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double g = rng.gamma(2.0, 1.0) + 1e-3;
            a[static_cast<std::size_t>(i) * n + j] = g;
            sum += g;
        }
        for (int j = 0; j < n; ++j)
            a[static_cast<std::size_t>(i) * n + j] /= sum;
    }
    return TransitionMatrix(n, std::move(a));
}

inline EmissionParams random_emissions(RngStream& rng, int n_states) {
    EmissionParams e;
    for (int s = 0; s < n_states; ++s) {
        StateEmission se;
        se.duration = {5.0 + 40.0 * rng.uniform(), 1.0 + 10.0 * rng.uniform()};
        se.max_depth = {2.0 + 30.0 * rng.uniform(), 0.5 + 8.0 * rng.uniform()};
        se.wiggliness = {1.0 + 30.0 * rng.uniform(), 0.5 + 10.0 * rng.uniform()};
        se.zero_mass = 0.05 + 0.4 * rng.uniform();
        e.states.push_back(se);
    }
    return e;
}

inline HierarchicalModel random_model(RngStream& rng, int n_production, int n_internal) {
    std::vector<TransitionMatrix> ptpms;
    for (int k = 0; k < n_internal; ++k)
        ptpms.push_back(random_tpm(rng, n_production));
    return make_hierarchical_model(random_tpm(rng, n_internal), std::move(ptpms),
                                   random_emissions(rng, n_production));
}

// Covariates drawn broadly across the emission ranges; occasional exact-zero
// wiggliness to exercise the point mass.
inline DataSet random_dataset(RngStream& rng, int n_frames, int max_dives) {
    DataSet d;
    for (int m = 0; m < n_frames; ++m) {
        DiveFrame frame;
        int t = 1 + static_cast<int>(rng.uniform() * max_dives);
        if (t > max_dives)
            t = max_dives;
        for (int i = 0; i < t; ++i) {
            CovariateTriple y;
            y.duration = 0.5 + 120.0 * rng.uniform();
            y.max_depth = 0.5 + 50.0 * rng.uniform();
            y.wiggliness = rng.uniform() < 0.25 ? 0.0 : 0.2 + 60.0 * rng.uniform();
            frame.dives.push_back(y);
        }
        d.frames.push_back(std::move(frame));
    }
    return d;
}

} // namespace hhmm::test
