#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <doctest.h>

#include "hhmm/posterior.hpp"
#include "hhmm/rng.hpp"
#include "hhmm/sampler.hpp"
#include "helpers.hpp"

using namespace hhmm;
using test::close;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

struct Fixture {
    DataSet data;
    std::shared_ptr<const PreparedData> prepared;
    ParameterSchema schema;
    PriorConfig priors;
    HierarchicalModel base;
    std::vector<double> theta0;

    explicit Fixture(bool estimate_tpms, int n_frames = 6, int max_dives = 5)
        : schema(3, 2, estimate_tpms, false) {
        RngStream rng(777, 0);
        base = test::tiny_model();
        data = test::random_dataset(rng, n_frames, max_dives);
        prepared = std::make_shared<const PreparedData>(PreparedData::from(data));
        theta0 = pack_parameters(schema, base);
    }

    PosteriorEvaluator make() const {
        return PosteriorEvaluator(prepared, schema, priors, base, InitMode::Derived);
    }
};

} // namespace

TEST_CASE("prepared data mirrors the dataset") {
    auto data = test::tiny_dataset();
    auto p = PreparedData::from(data);
    CHECK(p.n_frames == 2);
    CHECK(p.n_obs == 6);
    REQUIRE(p.offset.size() == 3);
    CHECK(p.offset[0] == 0);
    CHECK(p.offset[1] == 3);
    CHECK(p.offset[2] == 6);
    CHECK(p.duration[3] == 33.0);
    CHECK(p.log_duration[3] == std::log(33.0));
    CHECK(p.wiggliness_is_zero[1] == 1);
    CHECK(p.wiggliness_is_zero[0] == 0);
}

TEST_CASE("full energy agrees with the from-scratch evaluation") {
    Fixture fx(true);
    auto ev = fx.make();
    double e = ev.full_energy(fx.theta0);
    double scratch = energy(fx.schema, fx.theta0, fx.data, fx.priors, fx.base, InitMode::Derived);
    CHECK(close(e, scratch, 1e-12));
    CHECK(ev.current_energy() == e);
}

TEST_CASE("staged proposals are bitwise identical to fresh evaluation") {
    Fixture fx(true);
    auto ev = fx.make();
    auto fresh = fx.make();
    ev.full_energy(fx.theta0);

    auto layout = make_layout(fx.schema, ScheduleMode::Single);
    RngStream rng(3001, 0);
    auto theta = fx.theta0;
    int accepted = 0;

    for (int step = 0; step < 400; ++step) {
        const Block& block =
            layout.blocks[static_cast<std::size_t>(rng.uniform() * layout.blocks.size())
                          % layout.blocks.size()];
        auto prop = theta;
        for (int idx : block.indices) {
            double scale = block.kind == MoveKind::SimplexRow ? 0.05 : 0.1;
            prop[static_cast<std::size_t>(idx)] += scale * rng.normal();
        }
        double staged = ev.propose_energy(prop, block);
        double reference = fresh.full_energy(prop);
        CHECK(staged == reference);
        if (std::isfinite(staged) && rng.uniform() < 0.5) {
            ev.accept_proposal();
            theta = prop;
            ++accepted;
        } else {
            ev.reject_proposal();
        }
    }
    CHECK(accepted > 20);
    // committed caches still coherent after the walk
    auto verify = fx.make();
    CHECK(ev.current_energy() == verify.full_energy(theta));
}

TEST_CASE("rejection restores the committed state") {
    Fixture fx(false);
    auto ev = fx.make();
    double e0 = ev.full_energy(fx.theta0);

    auto layout = make_layout(fx.schema, ScheduleMode::Single);
    auto prop = fx.theta0;
    prop[0] += 1.0;
    ev.propose_energy(prop, layout.blocks[0]);
    ev.reject_proposal();
    CHECK(ev.current_energy() == e0);

    // next proposal evaluates against the original point
    auto fresh = fx.make();
    prop = fx.theta0;
    prop[1] += 0.5;
    CHECK(ev.propose_energy(prop, layout.blocks[1]) == fresh.full_energy(prop));
    ev.reject_proposal();
}

TEST_CASE("out-of-support proposals get +inf and are recoverable") {
    Fixture fx(false);
    auto ev = fx.make();
    ev.full_energy(fx.theta0);
    auto layout = make_layout(fx.schema, ScheduleMode::Single);

    auto bad = fx.theta0;
    bad[0] = -2.0;
    CHECK(ev.propose_energy(bad, layout.blocks[0]) == kInf);

    SUBCASE("rejecting keeps the caches") {
        ev.reject_proposal();
        auto fresh = fx.make();
        auto good = fx.theta0;
        good[2] *= 1.05;
        CHECK(ev.propose_energy(good, layout.blocks[2]) == fresh.full_energy(good));
        ev.accept_proposal();
    }

    SUBCASE("accepting poisons the point but later proposals restage fully") {
        ev.accept_proposal();
        CHECK(ev.current_energy() == kInf);
        auto fresh = fx.make();
        auto good = bad;
        good[0] = fx.theta0[0];
        CHECK(ev.propose_energy(good, layout.blocks[0]) == fresh.full_energy(good));
        ev.accept_proposal();
        CHECK(std::isfinite(ev.current_energy()));
    }
}

TEST_CASE("in-support proposals without a stationary distribution fail as +inf") {
    Fixture fx(true);
    auto ev = fx.make();
    ev.full_energy(fx.theta0);

    // internal matrix to the identity: in support, no unique stationary law
    Block block{"itpm", MoveKind::SimplexRow,
                {fx.schema.internal_tpm_index(0, 0), fx.schema.internal_tpm_index(1, 0)}};
    auto bad = fx.theta0;
    bad[static_cast<std::size_t>(fx.schema.internal_tpm_index(0, 0))] = 1.0;
    bad[static_cast<std::size_t>(fx.schema.internal_tpm_index(1, 0))] = 0.0;
    CHECK(ev.propose_energy(bad, block) == kInf);
    ev.reject_proposal();

    auto fresh = fx.make();
    auto good = fx.theta0;
    good[static_cast<std::size_t>(fx.schema.internal_tpm_index(0, 0))] = 0.9;
    CHECK(ev.propose_energy(good, block) == fresh.full_energy(good));
    ev.accept_proposal();
}

TEST_CASE("tpm blocks only touch their own chain") {
    Fixture fx(true, 8, 6);
    auto ev = fx.make();
    auto fresh = fx.make();
    ev.full_energy(fx.theta0);

    Block row{"ptpm2_row1", MoveKind::SimplexRow,
              {fx.schema.production_tpm_index(1, 0, 0), fx.schema.production_tpm_index(1, 0, 1)}};
    auto prop = fx.theta0;
    prop[static_cast<std::size_t>(row.indices[0])] += 0.03;
    prop[static_cast<std::size_t>(row.indices[1])] -= 0.02;
    CHECK(ev.propose_energy(prop, row) == fresh.full_energy(prop));
    ev.accept_proposal();

    // then an emission block, which crosses every chain
    Block mean{"duration_mean_2", MoveKind::Scalar, {fx.schema.mean_index(0, 1)}};
    auto prop2 = prop;
    prop2[static_cast<std::size_t>(mean.indices[0])] *= 1.07;
    CHECK(ev.propose_energy(prop2, mean) == fresh.full_energy(prop2));
    ev.reject_proposal();
    CHECK(ev.current_energy() == fresh.full_energy(prop));
}

TEST_CASE("full_energy can move the committed point repeatedly") {
    Fixture fx(false);
    auto ev = fx.make();
    auto fresh = fx.make();
    RngStream rng(3002, 0);
    auto theta = fx.theta0;
    for (int i = 0; i < 10; ++i) {
        theta[static_cast<std::size_t>(i) % theta.size()] *= 1.0 + 0.02 * rng.normal();
        if (in_support(fx.schema, theta))
            CHECK(ev.full_energy(theta) == fresh.full_energy(theta));
    }
}
