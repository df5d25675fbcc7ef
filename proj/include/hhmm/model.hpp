#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

// Core model types: gamma specs in user-facing (mean, sd) form, transition
// matrices with their multinomial-logit working representation, stationary
// distributions, and the two-level model bundle.

namespace hhmm {

// Row-stochasticity slack accepted on input.
inline constexpr double kRowSumTol = 1e-12;
// Residual accepted when verifying a stationary distribution.
inline constexpr double kStationaryTol = 1e-10;

// Gamma distribution described by its mean and standard deviation.
struct GammaSpec {
    double mean = 1.0;
    double sd = 1.0;
};

// (shape, rate) for a GammaSpec: shape = mean^2/sd^2, rate = mean/sd^2.
// Throws std::domain_error unless both inputs are finite and positive.
std::pair<double, double> gamma_shape_rate(const GammaSpec& g);

// One production state's emission distributions. The three covariates are
// conditionally independent given the state; wiggliness carries an extra point
// mass at exactly zero with weight zero_mass.
struct StateEmission {
    GammaSpec duration;
    GammaSpec max_depth;
    GammaSpec wiggliness;
    double zero_mass = 0.0;
};

struct EmissionParams {
    std::vector<StateEmission> states;

    int n_states() const { return static_cast<int>(states.size()); }
    // Dimensions and invariants: at least one state, finite positive gamma
    // parameters, zero_mass in [0, 1]. Throws std::invalid_argument.
    void validate() const;
};

// Row-stochastic square matrix, row-major storage.
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    // Validates size, entry range [0, 1], and row sums within kRowSumTol.
    TransitionMatrix(int n, std::vector<double> row_major);

    static TransitionMatrix uniform(int n);

    int size() const { return n_; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    std::span<const double> row(int i) const {
        return {a_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
    }
    const std::vector<double>& data() const { return a_; }

private:
    int n_ = 0;
    std::vector<double> a_;
};

// Multinomial-logit working form of a transition matrix: entry (i, j) holds
// log(gamma_ij / gamma_ii), so the diagonal is identically zero.
class WorkingMatrix {
public:
    WorkingMatrix() = default;
    WorkingMatrix(int n, std::vector<double> row_major);

    int size() const { return n_; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    std::span<const double> row(int i) const {
        return {a_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
    }

private:
    int n_ = 0;
    std::vector<double> a_;
};

// Probability vector; validates entries in [0, 1] and sum within kRowSumTol.
class StationaryDist {
public:
    StationaryDist() = default;
    explicit StationaryDist(std::vector<double> probs);

    int size() const { return static_cast<int>(p_.size()); }
    double operator[](int i) const { return p_[static_cast<std::size_t>(i)]; }
    std::span<const double> probs() const { return p_; }

private:
    std::vector<double> p_;
};

// exp-and-normalise one working row. max_shift subtracts the row maximum
// before exponentiating, which changes nothing mathematically but keeps the
// exponentials in range for arbitrary working values.
std::vector<double> softmax_row(std::span<const double> eta, bool max_shift = true);

// Row-wise softmax of the working matrix (diagonal entries are the zero
// reference category).
TransitionMatrix tpm_from_working(const WorkingMatrix& eta);

// Inverse map; requires every entry strictly positive (log of a zero entry is
// undefined). Throws std::domain_error otherwise.
WorkingMatrix working_from_tpm(const TransitionMatrix& gamma);

// Solves pi * gamma = pi, sum(pi) = 1 by direct elimination. Throws
// std::domain_error when the chain has no unique stationary distribution
// (reducible or otherwise degenerate within tolerance).
StationaryDist stationary(const TransitionMatrix& gamma);

// Completes a simplex point from its first n-1 coordinates. Returns nullopt
// when any coordinate leaves [0, 1] or the completion 1 - sum is negative.
std::optional<std::vector<double>> simplex_complete(std::span<const double> partial);

// One dive's covariates.
struct CovariateTriple {
    double duration = 0.0;   // >= 0
    double max_depth = 0.0;  // > 0
    double wiggliness = 0.0; // >= 0; exactly 0 hits the point mass

    void validate() const; // throws std::invalid_argument
};

// Full two-level model: K internal states each carrying its own production
// transition matrix over N states; emissions shared across internal states.
struct HierarchicalModel {
    TransitionMatrix internal_tpm;                 // K x K
    StationaryDist internal_init;                  // length K
    std::vector<TransitionMatrix> production_tpms; // K matrices, each N x N
    std::vector<StationaryDist> production_inits;  // K vectors, length N
    EmissionParams emissions;                      // N states

    int n_internal() const { return internal_tpm.size(); }
    int n_production() const { return emissions.n_states(); }
    void validate() const; // dimension coherence; throws std::invalid_argument
};

// Bundles the pieces, deriving every initial distribution as the stationary
// distribution of its transition matrix.
HierarchicalModel make_hierarchical_model(TransitionMatrix internal_tpm,
                                          std::vector<TransitionMatrix> production_tpms,
                                          EmissionParams emissions);

} // namespace hhmm
