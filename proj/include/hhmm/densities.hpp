#pragma once

#include <cmath>
#include <limits>
#include <numbers>

// Log-density helpers shared by the likelihood and the priors.
//
// Boundary convention: points where the mathematical density is 0 or where it
// diverges to +inf are both mapped to -inf. A -inf log-density can only ever
// raise the energy to +inf (auto-reject); mapping a singularity to +inf instead
// would create a -inf energy sink the samplers could fall into.

namespace hhmm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Gamma(shape, rate) with the terms split so callers that cache log(x) and the
// x-independent constant produce bitwise-identical values.
inline double gamma_log_pdf_terms(double x, double log_x, double constant,
                                  double shape_minus_1, double rate) {
    if (x < 0.0)
        return kNegInf;
    if (x == 0.0)
        return shape_minus_1 == 0.0 ? constant : kNegInf;
    return constant + shape_minus_1 * log_x - rate * x;
}

inline double gamma_log_pdf(double x, double shape, double rate) {
    const double constant = shape * std::log(rate) - std::lgamma(shape);
    return gamma_log_pdf_terms(x, x > 0.0 ? std::log(x) : 0.0, constant, shape - 1.0, rate);
}

inline double log_normal_log_pdf(double x, double location, double scale) {
    if (!(x > 0.0))
        return kNegInf;
    const double z = (std::log(x) - location) / scale;
    return -std::log(x) - std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi)
           - 0.5 * z * z;
}

// Inverse gamma with shape a and scale b: density b^a / Gamma(a) x^-(a+1) e^(-b/x).
inline double inv_gamma_log_pdf(double x, double shape, double scale) {
    if (!(x > 0.0))
        return kNegInf;
    return shape * std::log(scale) - std::lgamma(shape)
           - (shape + 1.0) * std::log(x) - scale / x;
}

inline double beta_log_pdf(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0))
        return kNegInf;
    const double constant = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    if (x == 0.0)
        return a == 1.0 ? constant + (b - 1.0) * std::log1p(-x) : kNegInf;
    if (x == 1.0)
        return b == 1.0 ? constant + (a - 1.0) * std::log(x) : kNegInf;
    return constant + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

} // namespace hhmm
