#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <doctest.h>

#include "hhmm/sampler.hpp"
#include "hhmm/rng.hpp"
#include "helpers.hpp"

using namespace hhmm;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::unique_ptr<FunctionTarget> gaussian_target(int dim = 1) {
    return std::make_unique<FunctionTarget>(dim, [](std::span<const double> x) {
        double e = 0.0;
        for (double v : x)
            e += 0.5 * v * v;
        return e;
    });
}

Layout scalar_layout(int dim) {
    Layout layout;
    layout.dim = dim;
    for (int i = 0; i < dim; ++i)
        layout.blocks.push_back({"x" + std::to_string(i), MoveKind::Scalar, {i}});
    return layout;
}

std::vector<std::string> names_for(int dim) {
    std::vector<std::string> n;
    for (int i = 0; i < dim; ++i)
        n.push_back("x" + std::to_string(i));
    return n;
}

} // namespace

TEST_CASE("acceptance probability at unit temperature is the plain rule") {
    RngStream rng(401, 0);
    for (int i = 0; i < 20000; ++i) {
        double cur = 200.0 * rng.normal();
        double prop = cur + 10.0 * rng.normal();
        double expected = std::min(1.0, std::exp(-(prop - cur)));
        CHECK(tempered_accept_probability(cur, prop, 1.0) == expected);
    }
}

TEST_CASE("acceptance probability handles temperature and infinities") {
    CHECK(tempered_accept_probability(5.0, 3.0, 1.0) == 1.0);
    CHECK(tempered_accept_probability(3.0, 5.0, 1.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(tempered_accept_probability(3.0, 5.0, 0.5) == doctest::Approx(std::exp(-1.0)));
    CHECK(tempered_accept_probability(3.0, 3.0, 0.25) == 1.0);
    CHECK(tempered_accept_probability(3.0, kInf, 1.0) == 0.0);
    CHECK(tempered_accept_probability(kInf, 3.0, 1.0) == 1.0);
    CHECK(tempered_accept_probability(kInf, kInf, 1.0) == 1.0);
}

TEST_CASE("control validation") {
    SamplerControl c;
    CHECK_NOTHROW(c.validate());
    c.burn_in = c.iterations + 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.tune_interval = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.accept_low = 0.5;
    c.accept_high = 0.4;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.scale_shrink = 1.2;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("layout validation catches gaps and overlaps") {
    Layout l = scalar_layout(3);
    CHECK_NOTHROW(l.validate());
    l.blocks.pop_back();
    CHECK_THROWS_AS(l.validate(), std::invalid_argument);
    l = scalar_layout(3);
    l.blocks[2].indices[0] = 1;
    CHECK_THROWS_AS(l.validate(), std::invalid_argument);
    l = scalar_layout(3);
    l.blocks[0].indices.clear();
    CHECK_THROWS_AS(l.validate(), std::invalid_argument);
}

TEST_CASE("layouts for each schedule") {
    ParameterSchema schema(3, 2, true, false);

    auto single = make_layout(schema, ScheduleMode::Single);
    // 21 emission scalars + 6 production rows + 2 internal rows
    CHECK(single.blocks.size() == 29);
    CHECK(single.blocks[0].name == "duration_mean_1");
    CHECK(single.blocks[0].indices.size() == 1);
    CHECK(single.blocks[21].kind == MoveKind::SimplexRow);

    auto by_var = make_layout(schema, ScheduleMode::BlockByVariable);
    REQUIRE(by_var.blocks.size() == 15);
    CHECK(by_var.blocks[0].name == "duration_means");
    CHECK(by_var.blocks[1].name == "duration_sds");
    CHECK(by_var.blocks[2].name == "max_depth_means");
    CHECK(by_var.blocks[6].name == "zero_masses");
    CHECK(by_var.blocks[0].indices
          == std::vector<int>{schema.mean_index(0, 0), schema.mean_index(0, 1),
                              schema.mean_index(0, 2)});

    auto by_par = make_layout(schema, ScheduleMode::BlockByParameter);
    REQUIRE(by_par.blocks.size() == 15);
    CHECK(by_par.blocks[0].name == "duration_means");
    CHECK(by_par.blocks[1].name == "max_depth_means");
    CHECK(by_par.blocks[3].name == "duration_sds");
    CHECK(by_par.blocks[6].name == "zero_masses");

    // every layout covers the full schema
    CHECK_NOTHROW(single.validate());
    CHECK_NOTHROW(by_var.validate());
    CHECK_NOTHROW(by_par.validate());
}

TEST_CASE("same seed gives identical chains") {
    SamplerControl c;
    c.iterations = 500;
    c.burn_in = 200;
    auto r1 = run_chain(gaussian_target(2), scalar_layout(2), {0.0, 0.0}, {1.0, 1.0}, c, 1.0,
                        RngStream(99, 0), names_for(2));
    auto r2 = run_chain(gaussian_target(2), scalar_layout(2), {0.0, 0.0}, {1.0, 1.0}, c, 1.0,
                        RngStream(99, 0), names_for(2));
    CHECK(r1.trace.columns == r2.trace.columns);
    CHECK(r1.trace.energy == r2.trace.energy);
    CHECK(r1.final_scales == r2.final_scales);

    auto r3 = run_chain(gaussian_target(2), scalar_layout(2), {0.0, 0.0}, {1.0, 1.0}, c, 1.0,
                        RngStream(99, 1), names_for(2));
    CHECK(r1.trace.columns != r3.trace.columns);
}

TEST_CASE("chain moves replicate the documented draw sequence") {
    SamplerControl c;
    c.iterations = 3;
    c.tune = false;

    Layout layout;
    layout.dim = 3;
    layout.blocks.push_back({"a", MoveKind::Scalar, {0}});
    layout.blocks.push_back({"simplex", MoveKind::SimplexRow, {1, 2}});

    std::vector<double> theta{0.5, 0.3, 0.4};
    std::vector<double> scales{0.7, 0.2, 0.2};
    auto energy_fn = [](std::span<const double> x) {
        return 0.5 * (x[0] * x[0] + 3.0 * x[1] * x[1] + 2.0 * x[2] * x[2]);
    };

    auto result = run_chain(std::make_unique<FunctionTarget>(3, energy_fn), layout, theta, scales,
                            c, 1.0, RngStream(55, 4), names_for(3));

    RngStream rng(55, 4);
    auto cur = theta;
    double cur_e = energy_fn(cur);
    for (int sweep = 0; sweep < 3; ++sweep) {
        {
            auto prop = cur;
            prop[0] += scales[0] * rng.normal();
            double u = rng.uniform();
            double pe = energy_fn(prop);
            if (u < tempered_accept_probability(cur_e, pe, 1.0)) {
                cur = prop;
                cur_e = pe;
            }
        }
        {
            auto prop = cur;
            prop[1] += scales[1] * rng.normal();
            prop[2] += scales[2] * rng.normal();
            double u = rng.uniform();
            bool ok = prop[1] >= 0.0 && prop[1] <= 1.0 && prop[2] >= 0.0 && prop[2] <= 1.0
                      && 1.0 - prop[1] - prop[2] >= 0.0;
            if (ok) {
                double pe = energy_fn(prop);
                if (u < tempered_accept_probability(cur_e, pe, 1.0)) {
                    cur = prop;
                    cur_e = pe;
                }
            }
        }
        for (int i = 0; i < 3; ++i)
            CHECK(result.trace.columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(sweep)]
                  == cur[static_cast<std::size_t>(i)]);
        CHECK(result.trace.energy[static_cast<std::size_t>(sweep)] == cur_e);
    }
}

TEST_CASE("simplex moves auto-reject without touching the target") {
    SamplerControl c;
    c.iterations = 50;
    c.tune = false;

    Layout layout;
    layout.dim = 2;
    layout.blocks.push_back({"simplex", MoveKind::SimplexRow, {0, 1}});

    long calls = 0;
    auto counter = std::make_unique<FunctionTarget>(2, [&calls](std::span<const double>) {
        ++calls;
        return 0.0;
    });
    // walking at scale 50 from (0.4, 0.3) essentially never stays on the simplex
    auto r = run_chain(std::move(counter), layout, {0.4, 0.3}, {50.0, 50.0}, c, 1.0,
                       RngStream(7, 0), names_for(2));
    CHECK(r.blocks[0].proposed == 50);
    CHECK(calls <= 3); // full_energy call at construction, plus rare lucky proposals
    CHECK(r.blocks[0].accepted <= 2);
}

TEST_CASE("pilot tuning pushes scales toward the acceptance band") {
    SamplerControl c;
    c.iterations = 2000;
    c.burn_in = 2000;

    // far-too-small scale accepts nearly everything: must grow
    auto tiny = run_chain(gaussian_target(), scalar_layout(1), {0.0}, {1e-4}, c, 1.0,
                          RngStream(21, 0), names_for(1));
    CHECK(tiny.final_scales[0] > 1e-4 * std::pow(1.1, 10.0));

    // huge scale rejects nearly everything: must shrink
    auto huge = run_chain(gaussian_target(), scalar_layout(1), {0.0}, {500.0}, c, 1.0,
                          RngStream(22, 0), names_for(1));
    CHECK(huge.final_scales[0] < 500.0 * std::pow(0.9, 10.0));

    // a well-tuned gaussian walk lands inside the band
    CHECK(tiny.blocks[0].last_window_fraction >= 0.0);
}

TEST_CASE("tuning freezes when burn-in ends") {
    SamplerControl c;
    c.iterations = 1200;
    c.burn_in = 400;

    ChainRunner runner(gaussian_target(), scalar_layout(1), {0.0}, {1e-3}, c, 1.0,
                       RngStream(23, 0), names_for(1));
    runner.advance(400);
    const double frozen = runner.scales()[0];
    CHECK(frozen > 1e-3);
    runner.advance(800);
    CHECK(runner.scales()[0] == frozen);

    // cumulative tallies cover exactly the post-burn-in stretch
    auto r = runner.take_result();
    CHECK(r.blocks[0].proposed == 800);
}

TEST_CASE("without tuning the scales never move") {
    SamplerControl c;
    c.iterations = 500;
    c.burn_in = 300;
    c.tune = false;
    auto r = run_chain(gaussian_target(), scalar_layout(1), {0.0}, {1e-4}, c, 1.0,
                       RngStream(24, 0), names_for(1));
    CHECK(r.final_scales[0] == 1e-4);
}

TEST_CASE("hotter chains accept more uphill moves") {
    SamplerControl c;
    c.iterations = 4000;
    c.tune = false;
    auto cold = run_chain(gaussian_target(), scalar_layout(1), {0.0}, {3.0}, c, 1.0,
                          RngStream(31, 0), names_for(1));
    auto hot = run_chain(gaussian_target(), scalar_layout(1), {0.0}, {3.0}, c, 0.1,
                         RngStream(31, 0), names_for(1));
    double f_cold = acceptance_fraction(cold.blocks[0].accepted, cold.blocks[0].proposed);
    double f_hot = acceptance_fraction(hot.blocks[0].accepted, hot.blocks[0].proposed);
    CHECK(f_hot > f_cold + 0.1);
}

TEST_CASE("trace records every sweep") {
    SamplerControl c;
    c.iterations = 250;
    c.burn_in = 100;
    auto r = run_chain(gaussian_target(2), scalar_layout(2), {0.1, -0.2}, {1.0, 1.0}, c, 1.0,
                       RngStream(41, 0), names_for(2));
    CHECK(r.trace.n_sweeps() == 250);
    CHECK(r.trace.burn_in == 100);
    REQUIRE(r.trace.columns.size() == 2);
    CHECK(r.trace.columns[0].size() == 250);
    CHECK(r.trace.names[1] == "x1");
    CHECK(r.final_theta[0] == r.trace.columns[0].back());
    CHECK(r.final_energy == r.trace.energy.back());
    CHECK_NOTHROW(r.trace.validate());
}

TEST_CASE("runner constructor rejects bad wiring") {
    SamplerControl c;
    CHECK_THROWS_AS(ChainRunner(gaussian_target(2), scalar_layout(1), {0.0}, {1.0}, c, 1.0,
                                RngStream(1, 0), names_for(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(ChainRunner(gaussian_target(1), scalar_layout(1), {0.0}, {-1.0}, c, 1.0,
                                RngStream(1, 0), names_for(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(ChainRunner(gaussian_target(1), scalar_layout(1), {0.0}, {1.0}, c, 1.5,
                                RngStream(1, 0), names_for(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(ChainRunner(gaussian_target(1), scalar_layout(1), {0.0}, {1.0}, c, 0.0,
                                RngStream(1, 0), names_for(1)),
                    std::invalid_argument);
}

TEST_CASE("runner refuses a start outside the target support") {
    auto half_line = [] {
        return std::make_unique<FunctionTarget>(
            1, [](std::span<const double> x) { return x[0] < 0.0 ? kInf : x[0] * x[0]; });
    };
    SamplerControl c;
    CHECK_THROWS_WITH_AS(ChainRunner(half_line(), scalar_layout(1), {-1.0}, {1.0}, c, 1.0,
                                     RngStream(1, 0), names_for(1)),
                         doctest::Contains("non-finite energy"), std::domain_error);
    CHECK_NOTHROW(ChainRunner(half_line(), scalar_layout(1), {1.0}, {1.0}, c, 1.0,
                              RngStream(1, 0), names_for(1)));
}

TEST_CASE("a gaussian target is sampled with the right moments") {
    SamplerControl c;
    c.iterations = 60000;
    c.burn_in = 2000;
    auto r = run_chain(gaussian_target(), scalar_layout(1), {0.0}, {2.4}, c, 1.0,
                       RngStream(51, 0), names_for(1));
    double sum = 0.0, sumsq = 0.0;
    long n = 0;
    for (std::size_t t = static_cast<std::size_t>(r.trace.burn_in);
         t < r.trace.columns[0].size(); ++t) {
        double v = r.trace.columns[0][t];
        sum += v;
        sumsq += v * v;
        ++n;
    }
    double mean = sum / static_cast<double>(n);
    double var = sumsq / static_cast<double>(n) - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
}
