#include "hhmm/energy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hhmm/densities.hpp"

namespace hhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* covariate_name(int c) {
    switch (c) {
    case 0: return "duration";
    case 1: return "max_depth";
    default: return "wiggliness";
    }
}

} // namespace

ParameterSchema::ParameterSchema(int n_production, int n_internal, bool estimate_tpms,
                                 bool free_inits)
    : n_(n_production), k_(n_internal), estimate_tpms_(estimate_tpms), free_inits_(free_inits) {
    if (n_ < 1 || n_ > 32 || k_ < 1 || k_ > 32)
        throw std::invalid_argument("ParameterSchema: state counts must be in [1, 32]");

    mean0_ = 0;
    for (int c = 0; c < 3; ++c)
        for (int s = 0; s < n_; ++s)
            params_.push_back({ParamRole::Mean, c, s, -1, -1, -1,
                               std::string(covariate_name(c)) + "_mean_" + std::to_string(s + 1)});
    sd0_ = dim();
    for (int c = 0; c < 3; ++c)
        for (int s = 0; s < n_; ++s)
            params_.push_back({ParamRole::Sd, c, s, -1, -1, -1,
                               std::string(covariate_name(c)) + "_sd_" + std::to_string(s + 1)});
    zero0_ = dim();
    for (int s = 0; s < n_; ++s)
        params_.push_back({ParamRole::ZeroMass, 2, s, -1, -1, -1,
                           "zero_mass_" + std::to_string(s + 1)});

    ptpm0_ = dim();
    if (estimate_tpms_) {
        for (int k = 0; k < k_; ++k)
            for (int i = 0; i < n_; ++i) {
                SimplexGroup g;
                g.name = "ptpm" + std::to_string(k + 1) + "_row" + std::to_string(i + 1);
                for (int j = 0; j + 1 < n_; ++j) {
                    g.indices.push_back(dim());
                    params_.push_back({ParamRole::TpmEntry, -1, -1, k, i, j,
                                       "ptpm" + std::to_string(k + 1) + "_" + std::to_string(i + 1)
                                           + "_" + std::to_string(j + 1)});
                }
                if (!g.indices.empty())
                    groups_.push_back(std::move(g));
            }
        itpm0_ = dim();
        for (int i = 0; i < k_; ++i) {
            SimplexGroup g;
            g.name = "itpm_row" + std::to_string(i + 1);
            for (int j = 0; j + 1 < k_; ++j) {
                g.indices.push_back(dim());
                params_.push_back({ParamRole::TpmEntry, -1, -1, -1, i, j,
                                   "itpm_" + std::to_string(i + 1) + "_" + std::to_string(j + 1)});
            }
            if (!g.indices.empty())
                groups_.push_back(std::move(g));
        }
    } else {
        itpm0_ = dim();
    }

    pinit0_ = dim();
    if (free_inits_) {
        for (int k = 0; k < k_; ++k) {
            SimplexGroup g;
            g.name = "pinit" + std::to_string(k + 1);
            for (int j = 0; j + 1 < n_; ++j) {
                g.indices.push_back(dim());
                params_.push_back({ParamRole::InitEntry, -1, -1, k, -1, j,
                                   "pinit" + std::to_string(k + 1) + "_" + std::to_string(j + 1)});
            }
            if (!g.indices.empty())
                groups_.push_back(std::move(g));
        }
        iinit0_ = dim();
        SimplexGroup g;
        g.name = "iinit";
        for (int j = 0; j + 1 < k_; ++j) {
            g.indices.push_back(dim());
            params_.push_back({ParamRole::InitEntry, -1, -1, -1, -1, j,
                               "iinit_" + std::to_string(j + 1)});
        }
        if (!g.indices.empty())
            groups_.push_back(std::move(g));
    } else {
        iinit0_ = dim();
    }
}

std::vector<std::string> ParameterSchema::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const ParamInfo& p : params_)
        out.push_back(p.name);
    return out;
}

int ParameterSchema::mean_index(int covariate, int state) const {
    return mean0_ + covariate * n_ + state;
}
int ParameterSchema::sd_index(int covariate, int state) const {
    return sd0_ + covariate * n_ + state;
}
int ParameterSchema::zero_mass_index(int state) const { return zero0_ + state; }
int ParameterSchema::production_tpm_index(int chain, int row, int col) const {
    return ptpm0_ + (chain * n_ + row) * (n_ - 1) + col;
}
int ParameterSchema::internal_tpm_index(int row, int col) const {
    return itpm0_ + row * (k_ - 1) + col;
}
int ParameterSchema::production_init_index(int chain, int col) const {
    return pinit0_ + chain * (n_ - 1) + col;
}
int ParameterSchema::internal_init_index(int col) const { return iinit0_ + col; }

void PriorConfig::validate() const {
    // The log-normal location is a log-space quantity; any finite value is legal.
    if (!std::isfinite(mean_location))
        throw std::invalid_argument("PriorConfig: mean_location must be finite");
    auto positive = [](double v, const char* what) {
        if (!(std::isfinite(v) && v > 0.0))
            throw std::invalid_argument(std::string("PriorConfig: ") + what
                                        + " must be finite and positive");
    };
    positive(mean_scale, "mean_scale");
    positive(sd_shape, "sd_shape");
    positive(sd_scale, "sd_scale");
    positive(zero_mass_a, "zero_mass_a");
    positive(zero_mass_b, "zero_mass_b");
    positive(tpm_a, "tpm_a");
    positive(tpm_b, "tpm_b");
}

bool in_support(const ParameterSchema& schema, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != schema.dim())
        return false;
    for (int i = 0; i < schema.dim(); ++i) {
        const double v = theta[static_cast<std::size_t>(i)];
        if (!std::isfinite(v))
            return false;
        switch (schema.info(i).role) {
        case ParamRole::Mean:
        case ParamRole::Sd:
            if (!(v > 0.0))
                return false;
            break;
        case ParamRole::ZeroMass:
        case ParamRole::TpmEntry:
        case ParamRole::InitEntry:
            if (!(v >= 0.0 && v <= 1.0))
                return false;
            break;
        }
    }
    for (const auto& g : schema.simplex_groups()) {
        double sum = 0.0;
        for (int idx : g.indices)
            sum += theta[static_cast<std::size_t>(idx)];
        if (1.0 - sum < 0.0)
            return false;
    }
    return true;
}

std::vector<double> log_prior_components(const ParameterSchema& schema,
                                         std::span<const double> theta,
                                         const PriorConfig& priors) {
    std::vector<double> out(static_cast<std::size_t>(schema.dim()));
    for (int i = 0; i < schema.dim(); ++i) {
        const double v = theta[static_cast<std::size_t>(i)];
        switch (schema.info(i).role) {
        case ParamRole::Mean:
            out[static_cast<std::size_t>(i)] =
                log_normal_log_pdf(v, priors.mean_location, priors.mean_scale);
            break;
        case ParamRole::Sd:
            out[static_cast<std::size_t>(i)] = inv_gamma_log_pdf(v, priors.sd_shape, priors.sd_scale);
            break;
        case ParamRole::ZeroMass:
            out[static_cast<std::size_t>(i)] =
                beta_log_pdf(v, priors.zero_mass_a, priors.zero_mass_b);
            break;
        case ParamRole::TpmEntry:
        case ParamRole::InitEntry:
            out[static_cast<std::size_t>(i)] = beta_log_pdf(v, priors.tpm_a, priors.tpm_b);
            break;
        }
    }
    return out;
}

double log_prior(const ParameterSchema& schema, std::span<const double> theta,
                 const PriorConfig& priors) {
    if (!in_support(schema, theta))
        return kNegInf;
    double sum = 0.0;
    for (double v : log_prior_components(schema, theta, priors)) {
        if (v == kNegInf)
            return kNegInf;
        sum += v;
    }
    return sum;
}

std::vector<double> pack_parameters(const ParameterSchema& schema, const HierarchicalModel& m) {
    if (m.n_production() != schema.n_production() || m.n_internal() != schema.n_internal())
        throw std::invalid_argument("pack_parameters: model shape does not match schema");
    std::vector<double> theta(static_cast<std::size_t>(schema.dim()));
    const int n = schema.n_production();
    const int k_n = schema.n_internal();
    for (int s = 0; s < n; ++s) {
        const StateEmission& e = m.emissions.states[static_cast<std::size_t>(s)];
        theta[static_cast<std::size_t>(schema.mean_index(0, s))] = e.duration.mean;
        theta[static_cast<std::size_t>(schema.mean_index(1, s))] = e.max_depth.mean;
        theta[static_cast<std::size_t>(schema.mean_index(2, s))] = e.wiggliness.mean;
        theta[static_cast<std::size_t>(schema.sd_index(0, s))] = e.duration.sd;
        theta[static_cast<std::size_t>(schema.sd_index(1, s))] = e.max_depth.sd;
        theta[static_cast<std::size_t>(schema.sd_index(2, s))] = e.wiggliness.sd;
        theta[static_cast<std::size_t>(schema.zero_mass_index(s))] = e.zero_mass;
    }
    if (schema.estimate_tpms()) {
        for (int k = 0; k < k_n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j + 1 < n; ++j)
                    theta[static_cast<std::size_t>(schema.production_tpm_index(k, i, j))] =
                        m.production_tpms[static_cast<std::size_t>(k)](i, j);
        for (int i = 0; i < k_n; ++i)
            for (int j = 0; j + 1 < k_n; ++j)
                theta[static_cast<std::size_t>(schema.internal_tpm_index(i, j))] =
                    m.internal_tpm(i, j);
    }
    if (schema.free_inits()) {
        for (int k = 0; k < k_n; ++k)
            for (int j = 0; j + 1 < n; ++j)
                theta[static_cast<std::size_t>(schema.production_init_index(k, j))] =
                    m.production_inits[static_cast<std::size_t>(k)][j];
        for (int j = 0; j + 1 < k_n; ++j)
            theta[static_cast<std::size_t>(schema.internal_init_index(j))] = m.internal_init[j];
    }
    return theta;
}

namespace {

std::optional<TransitionMatrix> tpm_from_theta(const ParameterSchema& schema,
                                               std::span<const double> theta, int chain,
                                               int size) {
    std::vector<double> a(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i) {
        double sum = 0.0;
        for (int j = 0; j + 1 < size; ++j) {
            const int idx = chain >= 0 ? schema.production_tpm_index(chain, i, j)
                                       : schema.internal_tpm_index(i, j);
            const double v = theta[static_cast<std::size_t>(idx)];
            if (!(v >= 0.0 && v <= 1.0))
                return std::nullopt;
            a[static_cast<std::size_t>(i) * size + j] = v;
            sum += v;
        }
        const double rest = 1.0 - sum;
        if (rest < 0.0)
            return std::nullopt;
        a[static_cast<std::size_t>(i) * size + (size - 1)] = rest;
    }
    return TransitionMatrix(size, std::move(a));
}

std::optional<StationaryDist> init_from_theta(const ParameterSchema& schema,
                                              std::span<const double> theta, int chain,
                                              int size) {
    std::vector<double> p(static_cast<std::size_t>(size));
    double sum = 0.0;
    for (int j = 0; j + 1 < size; ++j) {
        const int idx = chain >= 0 ? schema.production_init_index(chain, j)
                                   : schema.internal_init_index(j);
        const double v = theta[static_cast<std::size_t>(idx)];
        if (!(v >= 0.0 && v <= 1.0))
            return std::nullopt;
        p[static_cast<std::size_t>(j)] = v;
        sum += v;
    }
    const double rest = 1.0 - sum;
    if (rest < 0.0)
        return std::nullopt;
    p[static_cast<std::size_t>(size - 1)] = rest;
    return StationaryDist(std::move(p));
}

} // namespace

std::optional<HierarchicalModel> build_model(const ParameterSchema& schema,
                                             std::span<const double> theta,
                                             const HierarchicalModel& base,
                                             InitMode init_mode) {
    if (!in_support(schema, theta))
        return std::nullopt;
    const int n = schema.n_production();
    const int k_n = schema.n_internal();

    HierarchicalModel m;
    m.emissions.states.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        StateEmission& e = m.emissions.states[static_cast<std::size_t>(s)];
        e.duration = {theta[static_cast<std::size_t>(schema.mean_index(0, s))],
                      theta[static_cast<std::size_t>(schema.sd_index(0, s))]};
        e.max_depth = {theta[static_cast<std::size_t>(schema.mean_index(1, s))],
                       theta[static_cast<std::size_t>(schema.sd_index(1, s))]};
        e.wiggliness = {theta[static_cast<std::size_t>(schema.mean_index(2, s))],
                        theta[static_cast<std::size_t>(schema.sd_index(2, s))]};
        e.zero_mass = theta[static_cast<std::size_t>(schema.zero_mass_index(s))];
    }

    if (schema.estimate_tpms()) {
        m.production_tpms.reserve(static_cast<std::size_t>(k_n));
        for (int k = 0; k < k_n; ++k) {
            auto tpm = tpm_from_theta(schema, theta, k, n);
            if (!tpm)
                return std::nullopt;
            m.production_tpms.push_back(std::move(*tpm));
        }
        auto itpm = tpm_from_theta(schema, theta, -1, k_n);
        if (!itpm)
            return std::nullopt;
        m.internal_tpm = std::move(*itpm);
    } else {
        m.production_tpms = base.production_tpms;
        m.internal_tpm = base.internal_tpm;
    }

    if (schema.free_inits() && init_mode == InitMode::Free) {
        m.production_inits.reserve(static_cast<std::size_t>(k_n));
        for (int k = 0; k < k_n; ++k) {
            auto init = init_from_theta(schema, theta, k, n);
            if (!init)
                return std::nullopt;
            m.production_inits.push_back(std::move(*init));
        }
        auto iinit = init_from_theta(schema, theta, -1, k_n);
        if (!iinit)
            return std::nullopt;
        m.internal_init = std::move(*iinit);
    } else if (schema.estimate_tpms()) {
        try {
            m.production_inits.reserve(static_cast<std::size_t>(k_n));
            for (int k = 0; k < k_n; ++k)
                m.production_inits.push_back(stationary(m.production_tpms[static_cast<std::size_t>(k)]));
            m.internal_init = stationary(m.internal_tpm);
        } catch (const std::domain_error&) {
            return std::nullopt;
        }
    } else {
        m.production_inits = base.production_inits;
        m.internal_init = base.internal_init;
    }
    m.validate();
    return m;
}

double energy(const ParameterSchema& schema, std::span<const double> theta,
              const DataSet& data, const PriorConfig& priors,
              const HierarchicalModel& base, InitMode init_mode) {
    const double lp = log_prior(schema, theta, priors);
    if (lp == kNegInf)
        return kInf;
    const auto model = build_model(schema, theta, base, init_mode);
    if (!model)
        return kInf;
    const double ll = hierarchical_loglik(data, *model);
    if (ll == kNegInf)
        return kInf;
    return -ll - lp;
}

} // namespace hhmm
