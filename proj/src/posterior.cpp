#include "hhmm/posterior.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hhmm/densities.hpp"

namespace hhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Flush thresholds for the running likelihood product; wide enough that the
// product accumulates many steps between log() calls, narrow enough to never
// reach denormals or overflow.
constexpr double kFlushLo = 1e-280;
constexpr double kFlushHi = 1e280;

} // namespace

PreparedData PreparedData::from(const DataSet& data) {
    data.validate();
    PreparedData out;
    out.n_frames = data.n_frames();
    out.n_obs = data.total_dives();
    out.offset.reserve(static_cast<std::size_t>(out.n_frames) + 1);
    out.offset.push_back(0);
    out.duration.reserve(static_cast<std::size_t>(out.n_obs));
    out.max_depth.reserve(static_cast<std::size_t>(out.n_obs));
    out.wiggliness.reserve(static_cast<std::size_t>(out.n_obs));
    out.log_duration.reserve(static_cast<std::size_t>(out.n_obs));
    out.log_max_depth.reserve(static_cast<std::size_t>(out.n_obs));
    out.log_wiggliness.reserve(static_cast<std::size_t>(out.n_obs));
    out.wiggliness_is_zero.reserve(static_cast<std::size_t>(out.n_obs));
    for (const DiveFrame& f : data.frames) {
        for (const CovariateTriple& y : f.dives) {
            out.duration.push_back(y.duration);
            out.max_depth.push_back(y.max_depth);
            out.wiggliness.push_back(y.wiggliness);
            // Zero covariates keep a 0.0 placeholder; the density term never
            // reads log(x) when x == 0.
            out.log_duration.push_back(y.duration > 0.0 ? std::log(y.duration) : 0.0);
            out.log_max_depth.push_back(std::log(y.max_depth));
            out.log_wiggliness.push_back(y.wiggliness > 0.0 ? std::log(y.wiggliness) : 0.0);
            out.wiggliness_is_zero.push_back(y.wiggliness == 0.0 ? 1 : 0);
        }
        out.offset.push_back(static_cast<int>(out.duration.size()));
    }
    return out;
}

PosteriorEvaluator::PosteriorEvaluator(std::shared_ptr<const PreparedData> data,
                                       ParameterSchema schema, PriorConfig priors,
                                       HierarchicalModel base, InitMode init_mode)
    : data_(std::move(data)), schema_(std::move(schema)), priors_(std::move(priors)),
      base_(std::move(base)), init_mode_(init_mode), n_(schema_.n_production()),
      k_(schema_.n_internal()), energy_(kInf) {
    priors_.validate();
    base_.validate();
    if (base_.n_production() != n_ || base_.n_internal() != k_)
        throw std::invalid_argument("PosteriorEvaluator: base model shape mismatch");
    if (!data_ || data_->n_obs == 0)
        throw std::invalid_argument("PosteriorEvaluator: empty data");

    const auto ns = static_cast<std::size_t>(n_);
    const auto ks = static_cast<std::size_t>(k_);
    const auto obs = static_cast<std::size_t>(data_->n_obs);
    const auto fr = static_cast<std::size_t>(data_->n_frames);
    theta_.assign(static_cast<std::size_t>(schema_.dim()), 0.0);
    emis_.resize(ns);
    le_.assign(ns, std::vector<double>(obs));
    b_.assign(ns, std::vector<double>(obs));
    fll_.assign(ks, std::vector<double>(fr));
    scratch_le_.assign(ns, std::vector<double>(obs));
    scratch_b_.assign(ns, std::vector<double>(obs));
    scratch_fll_.assign(ks, std::vector<double>(fr));
    bcol_.resize(ns);
    lecol_.resize(ns);
    fllrow_.resize(ks);
    ws_v_.resize(std::max(ns, ks));
    ws_w_.resize(std::max(ns, ks));
}

void PosteriorEvaluator::snapshot_model_layer() {
    save_theta_ = theta_;
    save_emis_ = emis_;
    save_ptpm_ = ptpm_;
    save_itpm_ = itpm_;
    save_pinit_ = pinit_;
    save_iinit_ = iinit_;
    save_caches_valid_ = caches_valid_;
}

void PosteriorEvaluator::restore_model_layer() {
    theta_ = save_theta_;
    emis_ = save_emis_;
    ptpm_ = save_ptpm_;
    itpm_ = save_itpm_;
    pinit_ = save_pinit_;
    iinit_ = save_iinit_;
    caches_valid_ = save_caches_valid_;
}

bool PosteriorEvaluator::rebuild_model_layer() {
    for (int s = 0; s < n_; ++s) {
        StateEmission& e = emis_[static_cast<std::size_t>(s)];
        e.duration = {theta_[static_cast<std::size_t>(schema_.mean_index(0, s))],
                      theta_[static_cast<std::size_t>(schema_.sd_index(0, s))]};
        e.max_depth = {theta_[static_cast<std::size_t>(schema_.mean_index(1, s))],
                       theta_[static_cast<std::size_t>(schema_.sd_index(1, s))]};
        e.wiggliness = {theta_[static_cast<std::size_t>(schema_.mean_index(2, s))],
                        theta_[static_cast<std::size_t>(schema_.sd_index(2, s))]};
        e.zero_mass = theta_[static_cast<std::size_t>(schema_.zero_mass_index(s))];
    }

    auto row_from_theta = [&](auto index_of, int size, std::vector<double>& out, int row) {
        double sum = 0.0;
        for (int j = 0; j + 1 < size; ++j) {
            const double v = theta_[static_cast<std::size_t>(index_of(row, j))];
            out[static_cast<std::size_t>(row) * size + j] = v;
            sum += v;
        }
        out[static_cast<std::size_t>(row) * size + (size - 1)] = 1.0 - sum;
    };

    if (schema_.estimate_tpms()) {
        ptpm_.clear();
        for (int k = 0; k < k_; ++k) {
            std::vector<double> a(static_cast<std::size_t>(n_) * n_);
            for (int i = 0; i < n_; ++i)
                row_from_theta([&](int r, int c) { return schema_.production_tpm_index(k, r, c); },
                               n_, a, i);
            ptpm_.emplace_back(n_, std::move(a));
        }
        std::vector<double> a(static_cast<std::size_t>(k_) * k_);
        for (int i = 0; i < k_; ++i)
            row_from_theta([&](int r, int c) { return schema_.internal_tpm_index(r, c); }, k_, a, i);
        itpm_ = TransitionMatrix(k_, std::move(a));
    } else {
        ptpm_ = base_.production_tpms;
        itpm_ = base_.internal_tpm;
    }

    if (schema_.free_inits() && init_mode_ == InitMode::Free) {
        pinit_.clear();
        for (int k = 0; k < k_; ++k) {
            std::vector<double> p(static_cast<std::size_t>(n_));
            double sum = 0.0;
            for (int j = 0; j + 1 < n_; ++j) {
                p[static_cast<std::size_t>(j)] =
                    theta_[static_cast<std::size_t>(schema_.production_init_index(k, j))];
                sum += p[static_cast<std::size_t>(j)];
            }
            p[static_cast<std::size_t>(n_ - 1)] = 1.0 - sum;
            pinit_.emplace_back(std::move(p));
        }
        std::vector<double> p(static_cast<std::size_t>(k_));
        double sum = 0.0;
        for (int j = 0; j + 1 < k_; ++j) {
            p[static_cast<std::size_t>(j)] =
                theta_[static_cast<std::size_t>(schema_.internal_init_index(j))];
            sum += p[static_cast<std::size_t>(j)];
        }
        p[static_cast<std::size_t>(k_ - 1)] = 1.0 - sum;
        iinit_ = StationaryDist(std::move(p));
    } else if (schema_.estimate_tpms()) {
        try {
            pinit_.clear();
            for (int k = 0; k < k_; ++k)
                pinit_.push_back(stationary(ptpm_[static_cast<std::size_t>(k)]));
            iinit_ = stationary(itpm_);
        } catch (const std::domain_error&) {
            return false;
        }
    } else {
        pinit_ = base_.production_inits;
        iinit_ = base_.internal_init;
    }
    return true;
}

void PosteriorEvaluator::compute_state_column(int s, std::vector<double>& le,
                                              std::vector<double>& b) const {
    const StateEmission& e = emis_[static_cast<std::size_t>(s)];
    const auto [dur_shape, dur_rate] = gamma_shape_rate(e.duration);
    const auto [dep_shape, dep_rate] = gamma_shape_rate(e.max_depth);
    const auto [wig_shape, wig_rate] = gamma_shape_rate(e.wiggliness);
    const double dur_c = dur_shape * std::log(dur_rate) - std::lgamma(dur_shape);
    const double dep_c = dep_shape * std::log(dep_rate) - std::lgamma(dep_shape);
    const double wig_c = wig_shape * std::log(wig_rate) - std::lgamma(wig_shape);
    const double dur_s1 = dur_shape - 1.0, dep_s1 = dep_shape - 1.0, wig_s1 = wig_shape - 1.0;
    const double log_zm = std::log(e.zero_mass);
    const double log_1m_zm = std::log1p(-e.zero_mass);

    const PreparedData& d = *data_;
    for (int t = 0; t < d.n_obs; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        double v = gamma_log_pdf_terms(d.duration[ts], d.log_duration[ts], dur_c, dur_s1, dur_rate);
        v += gamma_log_pdf_terms(d.max_depth[ts], d.log_max_depth[ts], dep_c, dep_s1, dep_rate);
        if (d.wiggliness_is_zero[ts])
            v += log_zm;
        else
            v += log_1m_zm + gamma_log_pdf_terms(d.wiggliness[ts], d.log_wiggliness[ts], wig_c,
                                                 wig_s1, wig_rate);
        le[ts] = v;
        b[ts] = std::exp(v);
    }
}

double PosteriorEvaluator::production_forward(int chain, int frame) const {
    const PreparedData& d = *data_;
    const int lo = d.offset[static_cast<std::size_t>(frame)];
    const int hi = d.offset[static_cast<std::size_t>(frame) + 1];
    const TransitionMatrix& g = ptpm_[static_cast<std::size_t>(chain)];
    const StationaryDist& init = pinit_[static_cast<std::size_t>(chain)];
    double* v = ws_v_.data();
    double* w = ws_w_.data();

    double loglik = 0.0;
    double prod = 1.0;
    double scale = 0.0;
    for (int j = 0; j < n_; ++j) {
        v[j] = init[j] * bcol_[static_cast<std::size_t>(j)][lo];
        scale += v[j];
    }
    if (!(scale > 0.0) || !std::isfinite(scale))
        return production_forward_shifted(chain, frame);
    double inv = 1.0 / scale;
    for (int j = 0; j < n_; ++j)
        v[j] *= inv;
    prod *= scale;

    for (int t = lo + 1; t < hi; ++t) {
        for (int j = 0; j < n_; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n_; ++i)
                acc += v[i] * g(i, j);
            w[j] = acc * bcol_[static_cast<std::size_t>(j)][t];
        }
        scale = 0.0;
        for (int j = 0; j < n_; ++j)
            scale += w[j];
        if (!(scale > 0.0) || !std::isfinite(scale))
            return production_forward_shifted(chain, frame);
        inv = 1.0 / scale;
        for (int j = 0; j < n_; ++j)
            v[j] = w[j] * inv;
        prod *= scale;
        if (prod < kFlushLo || prod > kFlushHi) {
            loglik += std::log(prod);
            prod = 1.0;
        }
    }
    return loglik + std::log(prod);
}

double PosteriorEvaluator::production_forward_shifted(int chain, int frame) const {
    const PreparedData& d = *data_;
    const int lo = d.offset[static_cast<std::size_t>(frame)];
    const int hi = d.offset[static_cast<std::size_t>(frame) + 1];
    const TransitionMatrix& g = ptpm_[static_cast<std::size_t>(chain)];
    const StationaryDist& init = pinit_[static_cast<std::size_t>(chain)];
    double* v = ws_v_.data();
    double* w = ws_w_.data();

    double loglik = 0.0;
    for (int t = lo; t < hi; ++t) {
        double shift = kNegInf;
        for (int j = 0; j < n_; ++j)
            shift = std::max(shift, lecol_[static_cast<std::size_t>(j)][t]);
        if (shift == kNegInf)
            return kNegInf;
        if (t == lo) {
            for (int j = 0; j < n_; ++j)
                v[j] = init[j] * std::exp(lecol_[static_cast<std::size_t>(j)][t] - shift);
        } else {
            for (int j = 0; j < n_; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n_; ++i)
                    acc += v[i] * g(i, j);
                w[j] = acc * std::exp(lecol_[static_cast<std::size_t>(j)][t] - shift);
            }
            for (int j = 0; j < n_; ++j)
                v[j] = w[j];
        }
        double scale = 0.0;
        for (int j = 0; j < n_; ++j)
            scale += v[j];
        if (!(scale > 0.0))
            return kNegInf;
        loglik += shift + std::log(scale);
        const double inv = 1.0 / scale;
        for (int j = 0; j < n_; ++j)
            v[j] *= inv;
    }
    return loglik;
}

double PosteriorEvaluator::outer_loglik() const {
    double* v = ws_v_.data();
    double* w = ws_w_.data();
    double loglik = 0.0;
    for (int m = 0; m < data_->n_frames; ++m) {
        double shift = kNegInf;
        for (int k = 0; k < k_; ++k)
            shift = std::max(shift, fllrow_[static_cast<std::size_t>(k)][m]);
        if (shift == kNegInf)
            return kNegInf;
        if (m == 0) {
            for (int k = 0; k < k_; ++k)
                v[k] = iinit_[k] * std::exp(fllrow_[static_cast<std::size_t>(k)][m] - shift);
        } else {
            for (int k = 0; k < k_; ++k) {
                double acc = 0.0;
                for (int i = 0; i < k_; ++i)
                    acc += v[i] * itpm_(i, k);
                w[k] = acc * std::exp(fllrow_[static_cast<std::size_t>(k)][m] - shift);
            }
            for (int k = 0; k < k_; ++k)
                v[k] = w[k];
        }
        double scale = 0.0;
        for (int k = 0; k < k_; ++k)
            scale += v[k];
        if (!(scale > 0.0))
            return kNegInf;
        loglik += shift + std::log(scale);
        const double inv = 1.0 / scale;
        for (int k = 0; k < k_; ++k)
            v[k] *= inv;
    }
    return loglik;
}

double PosteriorEvaluator::stage(std::span<const double> theta, const std::vector<int>& states,
                                 const std::vector<int>& chains) {
    theta_.assign(theta.begin(), theta.end());
    if (!rebuild_model_layer()) {
        staged_mode_ = Staged::ModelFail;
        staged_energy_ = kInf;
        return kInf;
    }

    staged_states_ = states;
    staged_chains_ = chains;
    for (int s = 0; s < n_; ++s) {
        lecol_[static_cast<std::size_t>(s)] = le_[static_cast<std::size_t>(s)].data();
        bcol_[static_cast<std::size_t>(s)] = b_[static_cast<std::size_t>(s)].data();
    }
    for (int s : staged_states_) {
        compute_state_column(s, scratch_le_[static_cast<std::size_t>(s)],
                             scratch_b_[static_cast<std::size_t>(s)]);
        lecol_[static_cast<std::size_t>(s)] = scratch_le_[static_cast<std::size_t>(s)].data();
        bcol_[static_cast<std::size_t>(s)] = scratch_b_[static_cast<std::size_t>(s)].data();
    }
    for (int k = 0; k < k_; ++k)
        fllrow_[static_cast<std::size_t>(k)] = fll_[static_cast<std::size_t>(k)].data();
    for (int k : staged_chains_) {
        std::vector<double>& row = scratch_fll_[static_cast<std::size_t>(k)];
        for (int m = 0; m < data_->n_frames; ++m)
            row[static_cast<std::size_t>(m)] = production_forward(k, m);
        fllrow_[static_cast<std::size_t>(k)] = row.data();
    }

    const double ll = outer_loglik();
    const double lp = log_prior(schema_, theta_, priors_);
    staged_mode_ = Staged::Ready;
    staged_energy_ = (ll == kNegInf || lp == kNegInf) ? kInf : -ll - lp;
    return staged_energy_;
}

double PosteriorEvaluator::full_energy(std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != schema_.dim())
        throw std::invalid_argument("PosteriorEvaluator: theta dimension mismatch");
    pending_ = false;
    if (!in_support(schema_, theta)) {
        theta_.assign(theta.begin(), theta.end());
        energy_ = kInf;
        caches_valid_ = false;
        return energy_;
    }
    std::vector<int> states(static_cast<std::size_t>(n_));
    std::vector<int> chains(static_cast<std::size_t>(k_));
    for (int s = 0; s < n_; ++s)
        states[static_cast<std::size_t>(s)] = s;
    for (int k = 0; k < k_; ++k)
        chains[static_cast<std::size_t>(k)] = k;
    snapshot_model_layer();
    const double e = stage(theta, states, chains);
    if (staged_mode_ != Staged::Ready) {
        restore_model_layer();
        theta_.assign(theta.begin(), theta.end());
        energy_ = kInf;
        caches_valid_ = false;
        return energy_;
    }
    for (int s = 0; s < n_; ++s) {
        le_[static_cast<std::size_t>(s)].swap(scratch_le_[static_cast<std::size_t>(s)]);
        b_[static_cast<std::size_t>(s)].swap(scratch_b_[static_cast<std::size_t>(s)]);
    }
    for (int k = 0; k < k_; ++k)
        fll_[static_cast<std::size_t>(k)].swap(scratch_fll_[static_cast<std::size_t>(k)]);
    energy_ = e;
    caches_valid_ = true;
    return energy_;
}

double PosteriorEvaluator::propose_energy(std::span<const double> theta, const Block& changed) {
    assert(!pending_);
    if (static_cast<int>(theta.size()) != schema_.dim())
        throw std::invalid_argument("PosteriorEvaluator: theta dimension mismatch");
    pending_ = true;
    staged_theta_.assign(theta.begin(), theta.end());
    if (!in_support(schema_, theta)) {
        staged_mode_ = Staged::OutOfSupport;
        staged_energy_ = kInf;
        return kInf;
    }
    snapshot_model_layer();

    std::vector<int> states, chains;
    bool full = !caches_valid_;
    if (!full) {
        bool emission_changed = false;
        for (int idx : changed.indices) {
            const ParamInfo& p = schema_.info(idx);
            switch (p.role) {
            case ParamRole::Mean:
            case ParamRole::Sd:
            case ParamRole::ZeroMass:
                emission_changed = true;
                if (std::find(states.begin(), states.end(), p.state) == states.end())
                    states.push_back(p.state);
                break;
            case ParamRole::TpmEntry:
            case ParamRole::InitEntry:
                if (p.chain >= 0) {
                    if (std::find(chains.begin(), chains.end(), p.chain) == chains.end())
                        chains.push_back(p.chain);
                }
                // Internal-chain entries only affect the outer pass, which is
                // rerun unconditionally.
                break;
            }
        }
        if (emission_changed) {
            chains.clear();
            for (int k = 0; k < k_; ++k)
                chains.push_back(k);
        }
    } else {
        for (int s = 0; s < n_; ++s)
            states.push_back(s);
        for (int k = 0; k < k_; ++k)
            chains.push_back(k);
    }
    return stage(theta, states, chains);
}

void PosteriorEvaluator::accept_proposal() {
    assert(pending_);
    pending_ = false;
    switch (staged_mode_) {
    case Staged::OutOfSupport:
        theta_ = staged_theta_;
        energy_ = kInf;
        caches_valid_ = false;
        return;
    case Staged::ModelFail:
        // theta_ was already assigned during staging; caches no longer match.
        energy_ = kInf;
        caches_valid_ = false;
        return;
    case Staged::Ready:
        for (int s : staged_states_) {
            le_[static_cast<std::size_t>(s)].swap(scratch_le_[static_cast<std::size_t>(s)]);
            b_[static_cast<std::size_t>(s)].swap(scratch_b_[static_cast<std::size_t>(s)]);
        }
        for (int k : staged_chains_) {
            fll_[static_cast<std::size_t>(k)].swap(scratch_fll_[static_cast<std::size_t>(k)]);
        }
        energy_ = staged_energy_;
        caches_valid_ = true;
        return;
    }
}

void PosteriorEvaluator::reject_proposal() {
    assert(pending_);
    pending_ = false;
    if (staged_mode_ == Staged::OutOfSupport)
        return; // nothing was touched
    restore_model_layer();
}

} // namespace hhmm
