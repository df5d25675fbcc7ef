#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hhmm/energy.hpp"
#include "hhmm/likelihood.hpp"
#include "hhmm/target.hpp"

// Incremental posterior energy evaluation.
//
// A block move touches a small part of the model, so the evaluator keeps the
// expensive intermediates cached and recomputes only what the block reaches:
//   - per-production-state emission columns (log density and its exp) over all
//     dives; invalidated by that state's mean/sd/zero-mass entries,
//   - per-(chain, frame) production log-likelihoods; invalidated by emission
//     changes (all chains) or that chain's t.p.m./init entries,
//   - the outer pass over frames and the prior are cheap and always rerun.
// Proposals are staged into scratch buffers and swapped in on acceptance, so
// cached state is bitwise identical to a from-scratch evaluation.

namespace hhmm {

// Column-oriented copy of a DataSet with logs precomputed.
struct PreparedData {
    int n_frames = 0;
    int n_obs = 0;
    std::vector<int> offset; // frame m spans [offset[m], offset[m+1])
    std::vector<double> duration, max_depth, wiggliness;
    std::vector<double> log_duration, log_max_depth, log_wiggliness;
    std::vector<std::uint8_t> wiggliness_is_zero;

    static PreparedData from(const DataSet& data);
};

class PosteriorEvaluator final : public EnergyTarget {
public:
    PosteriorEvaluator(std::shared_ptr<const PreparedData> data, ParameterSchema schema,
                       PriorConfig priors, HierarchicalModel base, InitMode init_mode);

    int dim() const override { return schema_.dim(); }
    double full_energy(std::span<const double> theta) override;
    double propose_energy(std::span<const double> theta, const Block& changed) override;
    void accept_proposal() override;
    void reject_proposal() override;

    double current_energy() const { return energy_; }
    const ParameterSchema& schema() const { return schema_; }

private:
    enum class Staged { OutOfSupport, ModelFail, Ready };

    void snapshot_model_layer();
    void restore_model_layer();
    // Rebuilds emissions, t.p.m.s and inits from theta_. False when a derived
    // stationary distribution does not exist.
    bool rebuild_model_layer();
    void compute_state_column(int s, std::vector<double>& le, std::vector<double>& b) const;
    double production_forward(int chain, int frame) const;
    double production_forward_shifted(int chain, int frame) const;
    double outer_loglik() const;
    double stage(std::span<const double> theta, const std::vector<int>& states,
                 const std::vector<int>& chains);

    // Pointer tables resolving a state's b/le column or a chain's frame row to
    // either the committed cache or the staged scratch buffer.
    std::vector<const double*> bcol_, lecol_;
    std::vector<const double*> fllrow_;

    std::shared_ptr<const PreparedData> data_;
    ParameterSchema schema_;
    PriorConfig priors_;
    HierarchicalModel base_;
    InitMode init_mode_;
    int n_ = 0, k_ = 0;

    // Committed state. Model layer and caches match theta_ while caches_valid_.
    std::vector<double> theta_;
    std::vector<StateEmission> emis_;
    std::vector<TransitionMatrix> ptpm_;
    TransitionMatrix itpm_;
    std::vector<StationaryDist> pinit_;
    StationaryDist iinit_;
    std::vector<std::vector<double>> le_, b_; // [state][obs]
    std::vector<std::vector<double>> fll_;    // [chain][frame]
    double energy_;
    bool caches_valid_ = false;

    // Pending proposal.
    bool pending_ = false;
    Staged staged_mode_ = Staged::OutOfSupport;
    double staged_energy_;
    std::vector<double> staged_theta_;
    std::vector<int> staged_states_, staged_chains_;
    std::vector<std::vector<double>> scratch_le_, scratch_b_; // [state][obs], staged states only
    std::vector<std::vector<double>> scratch_fll_;            // [chain][frame], staged chains only

    // Snapshot of the model layer for rejection.
    std::vector<double> save_theta_;
    std::vector<StateEmission> save_emis_;
    std::vector<TransitionMatrix> save_ptpm_;
    TransitionMatrix save_itpm_;
    std::vector<StationaryDist> save_pinit_;
    StationaryDist save_iinit_;
    bool save_caches_valid_ = false;

    // Workspace for the forward passes.
    mutable std::vector<double> ws_v_, ws_w_;
};

} // namespace hhmm
