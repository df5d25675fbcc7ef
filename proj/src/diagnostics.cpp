#include "hhmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hhmm {

void Trace::validate() const {
    if (names.size() != columns.size())
        throw std::invalid_argument("Trace: name/column count mismatch");
    for (const auto& col : columns)
        if (col.size() != energy.size())
            throw std::invalid_argument("Trace: column length mismatch");
    if (burn_in < 0 || burn_in > n_sweeps())
        throw std::invalid_argument("Trace: burn_in outside [0, n_sweeps]");
}

namespace {

double mean_of(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    return sum / static_cast<double>(xs.size());
}

// Covariance at the given lag around a common mean, 1/T normalisation.
double autocovariance(std::span<const double> xs, double mu, std::size_t lag) {
    double sum = 0.0;
    for (std::size_t t = 0; t + lag < xs.size(); ++t)
        sum += (xs[t] - mu) * (xs[t + lag] - mu);
    return sum / static_cast<double>(xs.size());
}

bool is_constant(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

} // namespace

std::vector<double> acf(std::span<const double> series, int max_lag) {
    if (max_lag < 1)
        throw std::invalid_argument("acf: max_lag must be >= 1");
    if (series.size() <= static_cast<std::size_t>(max_lag))
        throw std::invalid_argument("acf: series no longer than max_lag");
    const double mu = mean_of(series);
    const double c0 = autocovariance(series, mu, 0);
    // c0 alone misses constants whose mean does not reproduce exactly
    if (!(c0 > 0.0) || is_constant(series))
        throw std::domain_error("acf: series is constant");
    std::vector<double> out(static_cast<std::size_t>(max_lag));
    for (int l = 1; l <= max_lag; ++l)
        out[static_cast<std::size_t>(l - 1)] =
            autocovariance(series, mu, static_cast<std::size_t>(l)) / c0;
    return out;
}

double ess(std::span<const double> series) {
    if (series.size() < 2)
        throw std::invalid_argument("ess: series too short");
    const double mu = mean_of(series);
    const double c0 = autocovariance(series, mu, 0);
    if (!(c0 > 0.0) || is_constant(series))
        throw std::domain_error("ess: series is constant");
    double rho_sum = 0.0;
    for (std::size_t lag = 1; lag < series.size(); ++lag) {
        const double rho = autocovariance(series, mu, lag) / c0;
        if (rho <= 0.0)
            break;
        rho_sum += rho;
    }
    return static_cast<double>(series.size()) / (1.0 + 2.0 * rho_sum);
}

double acceptance_fraction(long accepted, long proposed) {
    if (proposed <= 0)
        throw std::invalid_argument("acceptance_fraction: no proposals");
    if (accepted < 0 || accepted > proposed)
        throw std::invalid_argument("acceptance_fraction: accepted outside [0, proposed]");
    return static_cast<double>(accepted) / static_cast<double>(proposed);
}

double percentile(std::span<const double> sorted, double p) {
    if (sorted.empty())
        throw std::invalid_argument("percentile: empty input");
    if (!(p >= 0.0 && p <= 100.0))
        throw std::invalid_argument("percentile: p outside [0, 100]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * (p / 100.0);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size())
        return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

ParamSummary summarize_series(std::string name, std::span<const double> xs) {
    ParamSummary s;
    s.name = std::move(name);
    s.mean = mean_of(xs);
    double ss = 0.0;
    for (double x : xs)
        ss += (x - s.mean) * (x - s.mean);
    s.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    s.p2 = percentile(sorted, 2.0);
    s.p50 = percentile(sorted, 50.0);
    s.p98 = percentile(sorted, 98.0);
    return s;
}

} // namespace

PosteriorSummary summarize(const Trace& trace) {
    trace.validate();
    const auto skip = static_cast<std::size_t>(trace.burn_in);
    if (trace.energy.size() <= skip)
        throw std::invalid_argument("summarize: burn-in leaves no sweeps");
    PosteriorSummary out;
    out.rows.reserve(trace.columns.size() + 1);
    for (std::size_t c = 0; c < trace.columns.size(); ++c) {
        std::span<const double> xs(trace.columns[c].data() + skip,
                                   trace.columns[c].size() - skip);
        out.rows.push_back(summarize_series(trace.names[c], xs));
    }
    std::span<const double> es(trace.energy.data() + skip, trace.energy.size() - skip);
    out.rows.push_back(summarize_series("energy", es));
    return out;
}

} // namespace hhmm
