#include "hhmm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hhmm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void Layout::validate() const {
    if (dim < 1)
        throw std::invalid_argument("Layout: dimension must be positive");
    std::vector<int> seen(static_cast<std::size_t>(dim), 0);
    for (const Block& b : blocks) {
        if (b.indices.empty())
            throw std::invalid_argument("Layout: empty block '" + b.name + "'");
        for (int idx : b.indices) {
            if (idx < 0 || idx >= dim)
                throw std::invalid_argument("Layout: index out of range in block '" + b.name
                                            + "'");
            if (seen[static_cast<std::size_t>(idx)]++)
                throw std::invalid_argument("Layout: parameter visited twice in block '"
                                            + b.name + "'");
        }
    }
    for (int i = 0; i < dim; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            throw std::invalid_argument("Layout: parameter " + std::to_string(i)
                                        + " missing from every block");
}

double tempered_accept_probability(double current_energy, double proposed_energy, double beta) {
    if (proposed_energy == current_energy)
        return 1.0;
    if (std::isinf(proposed_energy) && proposed_energy > 0.0)
        return 0.0;
    if (std::isinf(current_energy) && current_energy > 0.0)
        return 1.0;
    const double x = beta * (proposed_energy - current_energy);
    if (x <= 0.0)
        return 1.0;
    return std::exp(-x);
}

void SamplerControl::validate() const {
    if (iterations < 1)
        throw std::invalid_argument("SamplerControl: iterations must be >= 1");
    if (burn_in < 0 || burn_in > iterations)
        throw std::invalid_argument("SamplerControl: burn_in outside [0, iterations]");
    if (tune_interval < 1)
        throw std::invalid_argument("SamplerControl: tune_interval must be >= 1");
    if (!(accept_low >= 0.0 && accept_low < accept_high && accept_high <= 1.0))
        throw std::invalid_argument("SamplerControl: acceptance band invalid");
    if (!(scale_grow > 1.0) || !(scale_shrink > 0.0 && scale_shrink < 1.0))
        throw std::invalid_argument("SamplerControl: scale multipliers invalid");
}

ChainRunner::ChainRunner(std::unique_ptr<EnergyTarget> target, Layout layout,
                         std::vector<double> theta0, std::vector<double> scales0,
                         SamplerControl control, double beta, RngStream rng,
                         std::vector<std::string> names)
    : target_(std::move(target)), layout_(std::move(layout)), control_(control), beta_(beta),
      rng_(rng), theta_(std::move(theta0)), scales_(std::move(scales0)) {
    if (!target_)
        throw std::invalid_argument("ChainRunner: null target");
    control_.validate();
    if (layout_.dim != target_->dim())
        throw std::invalid_argument("ChainRunner: layout dimension mismatch");
    layout_.validate();
    if (static_cast<int>(theta_.size()) != layout_.dim)
        throw std::invalid_argument("ChainRunner: initial point dimension mismatch");
    if (static_cast<int>(scales_.size()) != layout_.dim)
        throw std::invalid_argument("ChainRunner: proposal scale dimension mismatch");
    for (double s : scales_)
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("ChainRunner: proposal scales must be positive");
    if (!(beta_ > 0.0 && beta_ <= 1.0))
        throw std::invalid_argument("ChainRunner: beta outside (0, 1]");
    if (static_cast<int>(names.size()) != layout_.dim)
        throw std::invalid_argument("ChainRunner: name count mismatch");

    prop_.resize(theta_.size());
    energy_ = target_->full_energy(theta_);
    // From a +inf point every +inf proposal would be accepted (equal energies)
    // and the walk degenerates into an unconstrained drift, so refuse to start.
    if (!std::isfinite(energy_))
        throw std::domain_error("ChainRunner: initial point has non-finite energy");
    stats_.reserve(layout_.blocks.size());
    for (const Block& b : layout_.blocks) {
        BlockStats st;
        st.name = b.name;
        stats_.push_back(std::move(st));
    }
    trace_.names = std::move(names);
    trace_.columns.assign(trace_.names.size(), {});
    trace_.burn_in = control_.burn_in;
}

void ChainRunner::block_move(std::size_t bi) {
    const Block& blk = layout_.blocks[bi];
    prop_ = theta_;
    for (int idx : blk.indices)
        prop_[static_cast<std::size_t>(idx)] += scales_[static_cast<std::size_t>(idx)] * rng_.normal();
    const double u = rng_.uniform(); // drawn unconditionally: fixed consumption

    bool auto_reject = false;
    if (blk.kind == MoveKind::SimplexRow) {
        double sum = 0.0;
        for (int idx : blk.indices) {
            const double v = prop_[static_cast<std::size_t>(idx)];
            if (!(v >= 0.0 && v <= 1.0)) {
                auto_reject = true;
                break;
            }
            sum += v;
        }
        // Completion entry 1 - sum must stay non-negative.
        if (!auto_reject && 1.0 - sum < 0.0)
            auto_reject = true;
    }

    bool accepted = false;
    if (!auto_reject) {
        const double proposed = target_->propose_energy(prop_, blk);
        const double p = tempered_accept_probability(energy_, proposed, beta_);
        accepted = u < p;
        if (accepted) {
            std::swap(theta_, prop_);
            energy_ = proposed;
            target_->accept_proposal();
        } else {
            target_->reject_proposal();
        }
    }

    BlockStats& st = stats_[bi];
    ++st.window_proposed;
    ++st.proposed;
    if (accepted) {
        ++st.window_accepted;
        ++st.accepted;
    }
}

void ChainRunner::pilot_adjust() {
    for (std::size_t bi = 0; bi < stats_.size(); ++bi) {
        BlockStats& st = stats_[bi];
        if (st.window_proposed == 0)
            continue;
        const double f = static_cast<double>(st.window_accepted)
                         / static_cast<double>(st.window_proposed);
        st.last_window_fraction = f;
        if (f > control_.accept_high) {
            for (int idx : layout_.blocks[bi].indices)
                scales_[static_cast<std::size_t>(idx)] *= control_.scale_grow;
        } else if (f < control_.accept_low) {
            for (int idx : layout_.blocks[bi].indices)
                scales_[static_cast<std::size_t>(idx)] *= control_.scale_shrink;
        }
        st.window_accepted = 0;
        st.window_proposed = 0;
    }
}

void ChainRunner::sweep_once() {
    for (std::size_t bi = 0; bi < layout_.blocks.size(); ++bi)
        block_move(bi);
    ++sweep_;
    if (control_.tune && sweep_ <= control_.burn_in && sweep_ % control_.tune_interval == 0)
        pilot_adjust();
    if (sweep_ == control_.burn_in) {
        for (BlockStats& st : stats_) {
            st.accepted = 0;
            st.proposed = 0;
        }
    }
    for (std::size_t c = 0; c < trace_.columns.size(); ++c)
        trace_.columns[c].push_back(theta_[c]);
    trace_.energy.push_back(energy_);
}

void ChainRunner::advance(long n_sweeps) {
    for (long i = 0; i < n_sweeps; ++i)
        sweep_once();
}

void ChainRunner::swap_state_with(ChainRunner& other) {
    std::swap(theta_, other.theta_);
    std::swap(energy_, other.energy_);
    std::swap(target_, other.target_);
}

ChainResult ChainRunner::take_result() {
    ChainResult r;
    r.trace = std::move(trace_);
    r.blocks = std::move(stats_);
    r.final_scales = scales_;
    r.final_theta = theta_;
    r.final_energy = energy_;
    return r;
}

ChainResult run_chain(std::unique_ptr<EnergyTarget> target, Layout layout,
                      std::vector<double> theta0, std::vector<double> scales0,
                      const SamplerControl& control, double beta, RngStream rng,
                      std::vector<std::string> names) {
    ChainRunner runner(std::move(target), std::move(layout), std::move(theta0),
                       std::move(scales0), control, beta, rng, std::move(names));
    runner.advance(control.iterations);
    return runner.take_result();
}

Layout make_layout(const ParameterSchema& schema, ScheduleMode mode) {
    Layout layout;
    layout.dim = schema.dim();
    const int n = schema.n_production();

    auto covariate_block = [&](int cov, ParamRole role) {
        Block b;
        const char* cov_name = cov == 0 ? "duration" : cov == 1 ? "max_depth" : "wiggliness";
        b.name = std::string(cov_name) + (role == ParamRole::Mean ? "_means" : "_sds");
        b.kind = MoveKind::Scalar;
        for (int s = 0; s < n; ++s)
            b.indices.push_back(role == ParamRole::Mean ? schema.mean_index(cov, s)
                                                        : schema.sd_index(cov, s));
        return b;
    };

    switch (mode) {
    case ScheduleMode::Single:
        // Every emission scalar is its own block, in schema order.
        for (int i = 0; i < schema.dim(); ++i) {
            const ParamInfo& p = schema.info(i);
            if (p.role == ParamRole::Mean || p.role == ParamRole::Sd
                || p.role == ParamRole::ZeroMass)
                layout.blocks.push_back({p.name, MoveKind::Scalar, {i}});
        }
        break;
    case ScheduleMode::BlockByVariable:
        for (int cov = 0; cov < 3; ++cov) {
            layout.blocks.push_back(covariate_block(cov, ParamRole::Mean));
            layout.blocks.push_back(covariate_block(cov, ParamRole::Sd));
        }
        break;
    case ScheduleMode::BlockByParameter:
        for (int cov = 0; cov < 3; ++cov)
            layout.blocks.push_back(covariate_block(cov, ParamRole::Mean));
        for (int cov = 0; cov < 3; ++cov)
            layout.blocks.push_back(covariate_block(cov, ParamRole::Sd));
        break;
    }

    if (mode != ScheduleMode::Single) {
        Block zm;
        zm.name = "zero_masses";
        zm.kind = MoveKind::Scalar;
        for (int s = 0; s < n; ++s)
            zm.indices.push_back(schema.zero_mass_index(s));
        layout.blocks.push_back(std::move(zm));
    }

    for (const auto& g : schema.simplex_groups())
        layout.blocks.push_back({g.name, MoveKind::SimplexRow, g.indices});

    layout.validate();
    return layout;
}

} // namespace hhmm
