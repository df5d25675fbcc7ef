#include "hhmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hhmm {

namespace {

void check_stochastic_rows(int n, const std::vector<double>& a, const char* what) {
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = a[static_cast<std::size_t>(i) * n + j];
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument(std::string(what) + ": entry outside [0, 1] in row "
                                            + std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i)
                                        + " sums to " + std::to_string(sum));
    }
}

} // namespace

std::pair<double, double> gamma_shape_rate(const GammaSpec& g) {
    if (!(std::isfinite(g.mean) && g.mean > 0.0) || !(std::isfinite(g.sd) && g.sd > 0.0))
        throw std::domain_error("gamma_shape_rate: mean and sd must be finite and positive");
    const double shape = (g.mean * g.mean) / (g.sd * g.sd);
    const double rate = g.mean / (g.sd * g.sd);
    if (!(std::isfinite(shape) && shape > 0.0) || !(std::isfinite(rate) && rate > 0.0))
        throw std::domain_error("gamma_shape_rate: (mean, sd) maps outside the parameter space");
    return {shape, rate};
}

void EmissionParams::validate() const {
    if (states.empty())
        throw std::invalid_argument("EmissionParams: no states");
    for (std::size_t s = 0; s < states.size(); ++s) {
        const StateEmission& e = states[s];
        gamma_shape_rate(e.duration);
        gamma_shape_rate(e.max_depth);
        gamma_shape_rate(e.wiggliness);
        if (!(e.zero_mass >= 0.0 && e.zero_mass <= 1.0))
            throw std::invalid_argument("EmissionParams: zero_mass outside [0, 1] in state "
                                        + std::to_string(s + 1));
    }
}

TransitionMatrix::TransitionMatrix(int n, std::vector<double> row_major)
    : n_(n), a_(std::move(row_major)) {
    if (n_ < 1)
        throw std::invalid_argument("TransitionMatrix: size must be at least 1");
    if (a_.size() != static_cast<std::size_t>(n_) * n_)
        throw std::invalid_argument("TransitionMatrix: storage does not match size");
    check_stochastic_rows(n_, a_, "TransitionMatrix");
}

TransitionMatrix TransitionMatrix::uniform(int n) {
    if (n < 1)
        throw std::invalid_argument("TransitionMatrix::uniform: size must be at least 1");
    return TransitionMatrix(n, std::vector<double>(static_cast<std::size_t>(n) * n, 1.0 / n));
}

WorkingMatrix::WorkingMatrix(int n, std::vector<double> row_major)
    : n_(n), a_(std::move(row_major)) {
    if (n_ < 1)
        throw std::invalid_argument("WorkingMatrix: size must be at least 1");
    if (a_.size() != static_cast<std::size_t>(n_) * n_)
        throw std::invalid_argument("WorkingMatrix: storage does not match size");
    for (int i = 0; i < n_; ++i) {
        if ((*this)(i, i) != 0.0)
            throw std::invalid_argument("WorkingMatrix: diagonal must be zero (row "
                                        + std::to_string(i) + ")");
        for (int j = 0; j < n_; ++j)
            if (!std::isfinite((*this)(i, j)))
                throw std::invalid_argument("WorkingMatrix: non-finite entry");
    }
}

StationaryDist::StationaryDist(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty())
        throw std::invalid_argument("StationaryDist: empty");
    double sum = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("StationaryDist: entry outside [0, 1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
        throw std::invalid_argument("StationaryDist: entries sum to " + std::to_string(sum));
}

std::vector<double> softmax_row(std::span<const double> eta, bool max_shift) {
    if (eta.empty())
        throw std::invalid_argument("softmax_row: empty row");
    double shift = 0.0;
    if (max_shift)
        shift = *std::max_element(eta.begin(), eta.end());
    std::vector<double> out(eta.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < eta.size(); ++j) {
        out[j] = std::exp(eta[j] - shift);
        sum += out[j];
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw std::domain_error("softmax_row: normaliser is not finite and positive");
    for (double& v : out)
        v /= sum;
    return out;
}

TransitionMatrix tpm_from_working(const WorkingMatrix& eta) {
    const int n = eta.size();
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row = softmax_row(eta.row(i));
        // Row sums can land within one ulp of 1; snap for downstream validation.
        double sum = 0.0;
        for (double v : row)
            sum += v;
        for (int j = 0; j < n; ++j)
            a[static_cast<std::size_t>(i) * n + j] = row[static_cast<std::size_t>(j)] / sum;
    }
    return TransitionMatrix(n, std::move(a));
}

WorkingMatrix working_from_tpm(const TransitionMatrix& gamma) {
    const int n = gamma.size();
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double diag = gamma(i, i);
        if (!(diag > 0.0))
            throw std::domain_error("working_from_tpm: zero diagonal entry in row "
                                    + std::to_string(i));
        for (int j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const double v = gamma(i, j);
            if (!(v > 0.0))
                throw std::domain_error("working_from_tpm: zero entry at ("
                                        + std::to_string(i) + ", " + std::to_string(j) + ")");
            a[static_cast<std::size_t>(i) * n + j] = std::log(v / diag);
        }
    }
    return WorkingMatrix(n, std::move(a));
}

StationaryDist stationary(const TransitionMatrix& gamma) {
    const int n = gamma.size();
    if (n == 1)
        return StationaryDist({1.0});

    // Solve (gamma^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    // The replaced equation is redundant for any stochastic matrix (the rows of
    // gamma^T - I sum to zero), so the system is square and, for chains with a
    // unique stationary distribution, nonsingular.
    std::vector<double> A(static_cast<std::size_t>(n) * n);
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n; ++j)
            A[static_cast<std::size_t>(i) * n + j] = gamma(j, i) - (i == j ? 1.0 : 0.0);
    for (int j = 0; j < n; ++j)
        A[static_cast<std::size_t>(n - 1) * n + j] = 1.0;
    b[static_cast<std::size_t>(n - 1)] = 1.0;

    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(A[static_cast<std::size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(A[static_cast<std::size_t>(r) * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < 1e-12)
            throw std::domain_error("stationary: transition matrix is degenerate");
        if (piv != col) {
            for (int j = 0; j < n; ++j)
                std::swap(A[static_cast<std::size_t>(piv) * n + j],
                          A[static_cast<std::size_t>(col) * n + j]);
            std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(col)]);
        }
        const double d = A[static_cast<std::size_t>(col) * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = A[static_cast<std::size_t>(r) * n + col] / d;
            if (f == 0.0)
                continue;
            for (int j = col; j < n; ++j)
                A[static_cast<std::size_t>(r) * n + j] -= f * A[static_cast<std::size_t>(col) * n + j];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> pi(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double v = b[static_cast<std::size_t>(r)];
        for (int j = r + 1; j < n; ++j)
            v -= A[static_cast<std::size_t>(r) * n + j] * pi[static_cast<std::size_t>(j)];
        pi[static_cast<std::size_t>(r)] = v / A[static_cast<std::size_t>(r) * n + r];
    }

    // Clean up roundoff and verify pi really is stationary.
    double sum = 0.0;
    for (double& v : pi) {
        if (v < 0.0) {
            if (v < -1e-9)
                throw std::domain_error("stationary: negative probability in solution");
            v = 0.0;
        }
        sum += v;
    }
    if (!(sum > 0.0))
        throw std::domain_error("stationary: zero solution");
    for (double& v : pi)
        v /= sum;
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += pi[static_cast<std::size_t>(i)] * gamma(i, j);
        if (std::abs(acc - pi[static_cast<std::size_t>(j)]) > kStationaryTol)
            throw std::domain_error("stationary: residual exceeds tolerance");
    }
    return StationaryDist(std::move(pi));
}

std::optional<std::vector<double>> simplex_complete(std::span<const double> partial) {
    double sum = 0.0;
    for (double v : partial) {
        if (!(v >= 0.0 && v <= 1.0))
            return std::nullopt;
        sum += v;
    }
    const double rest = 1.0 - sum;
    if (rest < 0.0)
        return std::nullopt;
    std::vector<double> out(partial.begin(), partial.end());
    out.push_back(rest);
    return out;
}

void CovariateTriple::validate() const {
    if (!(std::isfinite(duration) && duration >= 0.0))
        throw std::invalid_argument("CovariateTriple: duration must be finite and >= 0");
    if (!(std::isfinite(max_depth) && max_depth > 0.0))
        throw std::invalid_argument("CovariateTriple: max_depth must be finite and > 0");
    if (!(std::isfinite(wiggliness) && wiggliness >= 0.0))
        throw std::invalid_argument("CovariateTriple: wiggliness must be finite and >= 0");
}

void HierarchicalModel::validate() const {
    emissions.validate();
    const int k = n_internal();
    const int n = n_production();
    if (k < 1)
        throw std::invalid_argument("HierarchicalModel: needs at least one internal state");
    if (internal_init.size() != k)
        throw std::invalid_argument("HierarchicalModel: internal init length mismatch");
    if (static_cast<int>(production_tpms.size()) != k
        || static_cast<int>(production_inits.size()) != k)
        throw std::invalid_argument("HierarchicalModel: need one production chain per internal state");
    for (int i = 0; i < k; ++i) {
        if (production_tpms[static_cast<std::size_t>(i)].size() != n)
            throw std::invalid_argument("HierarchicalModel: production tpm size mismatch");
        if (production_inits[static_cast<std::size_t>(i)].size() != n)
            throw std::invalid_argument("HierarchicalModel: production init length mismatch");
    }
}

HierarchicalModel make_hierarchical_model(TransitionMatrix internal_tpm,
                                          std::vector<TransitionMatrix> production_tpms,
                                          EmissionParams emissions) {
    HierarchicalModel m;
    m.internal_init = stationary(internal_tpm);
    m.internal_tpm = std::move(internal_tpm);
    m.production_inits.reserve(production_tpms.size());
    for (const TransitionMatrix& g : production_tpms)
        m.production_inits.push_back(stationary(g));
    m.production_tpms = std::move(production_tpms);
    m.emissions = std::move(emissions);
    m.validate();
    return m;
}

} // namespace hhmm
