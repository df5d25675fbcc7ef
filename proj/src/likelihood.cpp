#include "hhmm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hhmm/densities.hpp"

namespace hhmm {

namespace {

// Streaming log-sum-exp accumulator; ignores -inf terms.
struct LogSumExp {
    double max = kNegInf;
    double sum = 0.0;

    void add(double x) {
        if (x == kNegInf)
            return;
        if (x <= max) {
            sum += std::exp(x - max);
        } else {
            sum = sum * std::exp(max - x) + 1.0;
            max = x;
        }
    }
    double value() const { return max == kNegInf ? kNegInf : max + std::log(sum); }
};

void check_enumeration(double states, int steps, double limit, const char* what) {
    if (steps * std::log(states) > std::log(limit) * (1.0 + 1e-12))
        throw std::domain_error(std::string(what)
                                + ": enumeration too large; refusing to run");
}

} // namespace

int DataSet::total_dives() const {
    int n = 0;
    for (const DiveFrame& f : frames)
        n += static_cast<int>(f.dives.size());
    return n;
}

void DataSet::validate() const {
    if (frames.empty())
        throw std::invalid_argument("DataSet: no frames");
    for (std::size_t m = 0; m < frames.size(); ++m) {
        if (frames[m].dives.empty())
            throw std::invalid_argument("DataSet: frame " + std::to_string(m + 1)
                                        + " has no dives");
        for (std::size_t t = 0; t < frames[m].dives.size(); ++t) {
            try {
                frames[m].dives[t].validate();
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("DataSet: frame " + std::to_string(m + 1)
                                            + ", dive " + std::to_string(t + 1) + ": "
                                            + e.what());
            }
        }
    }
}

double log_emission(const CovariateTriple& y, int state, const EmissionParams& params) {
    const StateEmission& e = params.states[static_cast<std::size_t>(state)];
    const auto [dur_shape, dur_rate] = gamma_shape_rate(e.duration);
    const auto [dep_shape, dep_rate] = gamma_shape_rate(e.max_depth);
    double v = gamma_log_pdf(y.duration, dur_shape, dur_rate);
    v += gamma_log_pdf(y.max_depth, dep_shape, dep_rate);
    if (y.wiggliness == 0.0) {
        v += std::log(e.zero_mass);
    } else {
        const auto [wig_shape, wig_rate] = gamma_shape_rate(e.wiggliness);
        v += std::log1p(-e.zero_mass) + gamma_log_pdf(y.wiggliness, wig_shape, wig_rate);
    }
    return v;
}

double forward_loglik(std::span<const std::vector<double>> log_dens,
                      const TransitionMatrix& tpm, const StationaryDist& init) {
    const int n = tpm.size();
    if (init.size() != n)
        throw std::invalid_argument("forward_loglik: init length mismatch");
    if (log_dens.empty())
        throw std::invalid_argument("forward_loglik: no steps");

    std::vector<double> v(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    double ll = 0.0;
    for (std::size_t t = 0; t < log_dens.size(); ++t) {
        const std::vector<double>& le = log_dens[t];
        if (static_cast<int>(le.size()) != n)
            throw std::invalid_argument("forward_loglik: density row length mismatch");
        const double shift = *std::max_element(le.begin(), le.end());
        if (shift == kNegInf)
            return kNegInf;
        if (t == 0) {
            for (int j = 0; j < n; ++j)
                v[static_cast<std::size_t>(j)] =
                    init[j] * std::exp(le[static_cast<std::size_t>(j)] - shift);
        } else {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i)
                    acc += v[static_cast<std::size_t>(i)] * tpm(i, j);
                w[static_cast<std::size_t>(j)] =
                    acc * std::exp(le[static_cast<std::size_t>(j)] - shift);
            }
            std::swap(v, w);
        }
        double scale = 0.0;
        for (int j = 0; j < n; ++j)
            scale += v[static_cast<std::size_t>(j)];
        if (!(scale > 0.0))
            return kNegInf;
        ll += shift + std::log(scale);
        const double inv = 1.0 / scale;
        for (int j = 0; j < n; ++j)
            v[static_cast<std::size_t>(j)] *= inv;
    }
    return ll;
}

double production_loglik(const DiveFrame& frame, const TransitionMatrix& tpm,
                         const StationaryDist& init, const EmissionParams& params) {
    const int n = tpm.size();
    if (params.n_states() != n)
        throw std::invalid_argument("production_loglik: emission state count mismatch");
    std::vector<std::vector<double>> le(frame.dives.size(),
                                        std::vector<double>(static_cast<std::size_t>(n)));
    for (std::size_t t = 0; t < frame.dives.size(); ++t)
        for (int s = 0; s < n; ++s)
            le[t][static_cast<std::size_t>(s)] = log_emission(frame.dives[t], s, params);
    return forward_loglik(le, tpm, init);
}

double production_loglik_oracle(const DiveFrame& frame, const TransitionMatrix& tpm,
                                const StationaryDist& init, const EmissionParams& params) {
    const int n = tpm.size();
    const int t_len = static_cast<int>(frame.dives.size());
    if (params.n_states() != n)
        throw std::invalid_argument("production_loglik_oracle: emission state count mismatch");
    if (t_len == 0)
        throw std::invalid_argument("production_loglik_oracle: empty frame");
    check_enumeration(n, t_len, kMaxProductionEnumeration, "production_loglik_oracle");

    std::vector<std::vector<double>> le(static_cast<std::size_t>(t_len),
                                        std::vector<double>(static_cast<std::size_t>(n)));
    for (int t = 0; t < t_len; ++t)
        for (int s = 0; s < n; ++s)
            le[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] =
                log_emission(frame.dives[static_cast<std::size_t>(t)], s, params);

    std::vector<int> seq(static_cast<std::size_t>(t_len), 0);
    LogSumExp lse;
    for (;;) {
        double term = std::log(init[seq[0]]) + le[0][static_cast<std::size_t>(seq[0])];
        for (int t = 1; t < t_len && term != kNegInf; ++t)
            term += std::log(tpm(seq[static_cast<std::size_t>(t - 1)],
                                 seq[static_cast<std::size_t>(t)]))
                    + le[static_cast<std::size_t>(t)][static_cast<std::size_t>(seq[static_cast<std::size_t>(t)])];
        lse.add(term);

        int pos = t_len - 1;
        while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == n - 1) {
            seq[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0)
            break;
        ++seq[static_cast<std::size_t>(pos)];
    }
    return lse.value();
}

namespace {

// Per-frame production log-likelihoods under every internal state's chain.
std::vector<std::vector<double>>
frame_logliks(const DataSet& data, const HierarchicalModel& model, bool oracle) {
    const int k_n = model.n_internal();
    std::vector<std::vector<double>> lp(data.frames.size(),
                                        std::vector<double>(static_cast<std::size_t>(k_n)));
    for (std::size_t m = 0; m < data.frames.size(); ++m)
        for (int k = 0; k < k_n; ++k) {
            const auto& tpm = model.production_tpms[static_cast<std::size_t>(k)];
            const auto& init = model.production_inits[static_cast<std::size_t>(k)];
            lp[m][static_cast<std::size_t>(k)] =
                oracle ? production_loglik_oracle(data.frames[m], tpm, init, model.emissions)
                       : production_loglik(data.frames[m], tpm, init, model.emissions);
        }
    return lp;
}

} // namespace

double hierarchical_loglik(const DataSet& data, const HierarchicalModel& model) {
    const std::vector<std::vector<double>> lp = frame_logliks(data, model, false);
    return forward_loglik(lp, model.internal_tpm, model.internal_init);
}

double hierarchical_loglik_oracle(const DataSet& data, const HierarchicalModel& model) {
    const int k_n = model.n_internal();
    const int m_len = data.n_frames();
    if (m_len == 0)
        throw std::invalid_argument("hierarchical_loglik_oracle: empty data set");
    check_enumeration(k_n, m_len, kMaxInternalEnumeration, "hierarchical_loglik_oracle");

    const std::vector<std::vector<double>> lp = frame_logliks(data, model, true);
    std::vector<int> seq(static_cast<std::size_t>(m_len), 0);
    LogSumExp lse;
    for (;;) {
        double term = std::log(model.internal_init[seq[0]]) + lp[0][static_cast<std::size_t>(seq[0])];
        for (int m = 1; m < m_len && term != kNegInf; ++m)
            term += std::log(model.internal_tpm(seq[static_cast<std::size_t>(m - 1)],
                                                seq[static_cast<std::size_t>(m)]))
                    + lp[static_cast<std::size_t>(m)][static_cast<std::size_t>(seq[static_cast<std::size_t>(m)])];
        lse.add(term);

        int pos = m_len - 1;
        while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == k_n - 1) {
            seq[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0)
            break;
        ++seq[static_cast<std::size_t>(pos)];
    }
    return lse.value();
}

} // namespace hhmm
