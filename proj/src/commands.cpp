#include "hhmm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "hhmm/io.hpp"

namespace hhmm {

namespace {

ScheduleMode schedule_of(const SamplerConfig& s) {
    switch (s.mode) {
    case SamplerMode::Single: return ScheduleMode::Single;
    case SamplerMode::BlockByVariable: return ScheduleMode::BlockByVariable;
    case SamplerMode::BlockByParameter: return ScheduleMode::BlockByParameter;
    case SamplerMode::Pt: return s.pt_schedule;
    }
    return ScheduleMode::Single;
}

const char* mode_name(SamplerMode m) {
    switch (m) {
    case SamplerMode::Single: return "single";
    case SamplerMode::BlockByVariable: return "block_by_variable";
    case SamplerMode::BlockByParameter: return "block_by_parameter";
    case SamplerMode::Pt: return "pt";
    }
    return "single";
}

const char* schedule_name(ScheduleMode m) {
    switch (m) {
    case ScheduleMode::Single: return "single";
    case ScheduleMode::BlockByVariable: return "block_by_variable";
    case ScheduleMode::BlockByParameter: return "block_by_parameter";
    }
    return "single";
}

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

std::string ladder_string(const std::vector<double>& betas) {
    std::string out;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (i)
            out += ' ';
        out += format_double(betas[i]);
    }
    return out;
}

// Per-summary-row acceptance fractions: each parameter inherits its block's
// post-burn-in fraction; the trailing energy row gets NaN (empty cell).
std::vector<double> acceptance_column(const Layout& layout,
                                      const std::vector<BlockStats>& stats, int dim) {
    std::vector<double> out(static_cast<std::size_t>(dim) + 1,
                            std::numeric_limits<double>::quiet_NaN());
    for (std::size_t bi = 0; bi < layout.blocks.size(); ++bi) {
        const BlockStats& st = stats[bi];
        if (st.proposed <= 0)
            continue;
        const double f = acceptance_fraction(st.accepted, st.proposed);
        for (int idx : layout.blocks[bi].indices)
            out[static_cast<std::size_t>(idx)] = f;
    }
    return out;
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides) {
    if (overrides.data)
        cfg.data_path = overrides.data;
    if (overrides.out)
        cfg.output_dir = *overrides.out;
    if (overrides.seed)
        cfg.seed = *overrides.seed;
}

void record_overrides(std::vector<std::pair<std::string, std::string>>& manifest,
                      const CliOverrides& overrides) {
    if (overrides.data)
        manifest.emplace_back("override_data", *overrides.data);
    if (overrides.out)
        manifest.emplace_back("override_out", *overrides.out);
    if (overrides.seed)
        manifest.emplace_back("override_seed", std::to_string(*overrides.seed));
}

} // namespace

FitSetup make_fit_setup(const ExperimentConfig& cfg, const DataSet& data) {
    if (!cfg.simulation)
        throw std::runtime_error(
            "fit needs a simulation block: its ground truth defines the model structure "
            "and any fixed transition matrices");

    FitSetup setup{
        ParameterSchema(cfg.model.n_production, cfg.model.n_internal,
                        cfg.sampler.tpm_estimation, cfg.model.init_mode == InitMode::Free),
        {}, {}, {}, {}, cfg.simulation->ground_truth,
        std::make_shared<const PreparedData>(PreparedData::from(data)),
        cfg.priors, cfg.model.init_mode, {}};

    setup.layout = make_layout(setup.schema, schedule_of(cfg.sampler));
    setup.names = setup.schema.names();
    setup.theta0 = initial_theta(setup.schema, setup.base, cfg.sampler.initial_model);

    if (cfg.sampler.uniform_scale) {
        setup.scales0.assign(static_cast<std::size_t>(setup.schema.dim()),
                             *cfg.sampler.uniform_scale);
    } else {
        setup.scales0 = default_scales(setup.schema, setup.theta0);
    }
    for (const auto& [name, value] : cfg.sampler.scale_overrides) {
        bool found = false;
        for (int i = 0; i < setup.schema.dim(); ++i)
            if (setup.names[static_cast<std::size_t>(i)] == name) {
                setup.scales0[static_cast<std::size_t>(i)] = value;
                found = true;
                break;
            }
        if (!found)
            throw std::runtime_error("initial_scales: unknown parameter '" + name + "'");
    }

    setup.control.iterations = cfg.sampler.iterations;
    setup.control.burn_in = cfg.sampler.burn_in;
    setup.control.tune_interval = cfg.sampler.tune_interval;
    setup.control.validate();
    return setup;
}

std::unique_ptr<EnergyTarget> make_posterior_target(const FitSetup& setup) {
    return std::make_unique<PosteriorEvaluator>(setup.data, setup.schema, setup.priors,
                                                setup.base, setup.init_mode);
}

int cmd_simulate(const std::string& config_path, const CliOverrides& overrides) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        if (overrides.data)
            throw std::runtime_error("simulate does not accept --data");
        if (overrides.out)
            cfg.output_dir = *overrides.out;
        if (!cfg.simulation)
            throw std::runtime_error("simulate needs a simulation block in the config");
        SimConfig sim{cfg.simulation->ground_truth, cfg.simulation->n_frames,
                      cfg.simulation->dives_per_frame,
                      overrides.seed ? *overrides.seed : cfg.simulation->seed};
        const SimOutput out = simulate(sim);

        const std::string data_path = join_path(cfg.output_dir, "data.csv");
        const std::string truth_path = join_path(cfg.output_dir, "truth.csv");
        write_data_csv(data_path, out.data);
        write_truth_csv(truth_path, out);

        std::vector<std::pair<std::string, std::string>> manifest{
            {"schema", "manifest/v1"},
            {"command", "simulate"},
            {"config", config_path},
            {"config_hash", cfg.config_hash},
            {"seed", std::to_string(sim.seed)},
            {"n_frames", std::to_string(sim.n_frames)},
            {"n_dives", std::to_string(out.data.total_dives())},
        };
        record_overrides(manifest, overrides);
        write_manifest(join_path(cfg.output_dir, "manifest.txt"), manifest);
        std::cout << "wrote " << data_path << " (" << out.data.total_dives() << " dives in "
                  << sim.n_frames << " frames)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << '\n';
        return 1;
    }
}

int cmd_fit(const std::string& config_path, const CliOverrides& overrides) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        apply_overrides(cfg, overrides);
        if (!cfg.data_path)
            throw std::runtime_error("fit needs a data file ('data' in the config or --data)");
        const std::string data_hash = hash_hex(read_file(*cfg.data_path));
        const DataSet data = read_data_csv(*cfg.data_path);
        FitSetup setup = make_fit_setup(cfg, data);

        std::vector<std::pair<std::string, std::string>> common_meta{
            {"mode", mode_name(cfg.sampler.mode)},
            {"schedule", schedule_name(schedule_of(cfg.sampler))},
            {"seed", std::to_string(cfg.seed)},
            {"config_hash", cfg.config_hash},
            {"data_hash", data_hash},
        };

        std::vector<std::pair<std::string, std::string>> manifest{
            {"schema", "manifest/v1"},
            {"command", "fit"},
            {"config", config_path},
            {"config_hash", cfg.config_hash},
            {"seed", std::to_string(cfg.seed)},
            {"data", *cfg.data_path},
            {"data_hash", data_hash},
            {"mode", mode_name(cfg.sampler.mode)},
        };
        record_overrides(manifest, overrides);

        if (cfg.sampler.mode != SamplerMode::Pt) {
            ChainResult result =
                run_chain(make_posterior_target(setup), setup.layout, setup.theta0,
                          setup.scales0, setup.control, 1.0, RngStream(cfg.seed, 0),
                          setup.names);
            result.trace.metadata = common_meta;
            write_trace_csv(join_path(cfg.output_dir, "trace.csv"), result.trace);
            const PosteriorSummary summary = summarize(result.trace);
            const std::vector<double> accept =
                acceptance_column(setup.layout, result.blocks, setup.schema.dim());
            write_summary_csv(join_path(cfg.output_dir, "summary.csv"), summary, &accept);
        } else {
            const Ladder ladder(cfg.tempering.ladder);
            const SwapSchedule schedule{cfg.tempering.cycle_length, cfg.tempering.num_cycles};
            TemperingResult result = run_parallel_tempering(
                [&setup] { return make_posterior_target(setup); }, setup.layout, setup.theta0,
                setup.scales0, setup.control, ladder, schedule, cfg.seed,
                cfg.tempering.parallel, setup.names);

            for (int j = 0; j < ladder.size(); ++j) {
                Trace& trace = result.chains[static_cast<std::size_t>(j)].trace;
                trace.metadata = common_meta;
                trace.metadata.emplace_back("ladder", ladder_string(cfg.tempering.ladder));
                trace.metadata.emplace_back("cycle_length",
                                            std::to_string(schedule.cycle_length));
                trace.metadata.emplace_back("num_cycles", std::to_string(schedule.num_cycles));
                trace.metadata.emplace_back("chain_index", std::to_string(j));
                trace.metadata.emplace_back("beta", format_double(ladder[j]));
                const std::string file =
                    j == 0 ? "trace.csv" : "trace_chain" + std::to_string(j) + ".csv";
                write_trace_csv(join_path(cfg.output_dir, file), trace);
            }
            write_swaps_csv(join_path(cfg.output_dir, "swaps.csv"), result.swaps);
            const PosteriorSummary summary = summarize(result.chains[0].trace);
            const std::vector<double> accept =
                acceptance_column(setup.layout, result.chains[0].blocks, setup.schema.dim());
            write_summary_csv(join_path(cfg.output_dir, "summary.csv"), summary, &accept);
            manifest.emplace_back("ladder", ladder_string(cfg.tempering.ladder));
            manifest.emplace_back("swap_attempts", std::to_string(result.swaps.size()));
        }
        write_manifest(join_path(cfg.output_dir, "manifest.txt"), manifest);
        std::cout << "wrote " << join_path(cfg.output_dir, "trace.csv") << " and "
                  << join_path(cfg.output_dir, "summary.csv") << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fit: " << e.what() << '\n';
        return 1;
    }
}

int cmd_diagnose(const std::string& config_path, const CliOverrides& overrides) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        apply_overrides(cfg, overrides);
        if (!cfg.data_path)
            throw std::runtime_error(
                "diagnose needs a trace file ('data' in the config or --data)");
        Trace trace = read_trace_csv(*cfg.data_path);
        if (cfg.diagnose.burn_in) {
            if (*cfg.diagnose.burn_in >= trace.n_sweeps())
                throw std::runtime_error("diagnose: burn_in override leaves no sweeps");
            trace.burn_in = *cfg.diagnose.burn_in;
        }

        const PosteriorSummary summary = summarize(trace);
        write_summary_csv(join_path(cfg.output_dir, "summary.csv"), summary, nullptr);

        std::vector<AcfRow> acf_rows;
        std::vector<EssRow> ess_rows;
        const auto skip = static_cast<std::size_t>(trace.burn_in);
        auto diagnose_series = [&](const std::string& name, const std::vector<double>& full) {
            std::span<const double> xs(full.data() + skip, full.size() - skip);
            double lo = xs.front(), hi = xs.front();
            for (double x : xs) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            if (lo == hi) {
                std::cerr << "diagnose: column '" << name
                          << "' is constant after burn-in; skipping acf/ess\n";
                return;
            }
            const int max_lag =
                std::min<long>(cfg.diagnose.max_lag, static_cast<long>(xs.size()) - 1);
            const std::vector<double> rho = acf(xs, max_lag);
            for (int l = 1; l <= max_lag; ++l)
                acf_rows.push_back({name, l, rho[static_cast<std::size_t>(l - 1)]});
            ess_rows.push_back({name, ess(xs)});
        };
        for (std::size_t c = 0; c < trace.names.size(); ++c)
            diagnose_series(trace.names[c], trace.columns[c]);
        diagnose_series("energy", trace.energy);

        write_acf_csv(join_path(cfg.output_dir, "acf.csv"), acf_rows);
        write_ess_csv(join_path(cfg.output_dir, "ess.csv"), ess_rows);

        std::vector<std::pair<std::string, std::string>> manifest{
            {"schema", "manifest/v1"},
            {"command", "diagnose"},
            {"config", config_path},
            {"config_hash", cfg.config_hash},
            {"trace", *cfg.data_path},
            {"burn_in", std::to_string(trace.burn_in)},
            {"max_lag", std::to_string(cfg.diagnose.max_lag)},
        };
        record_overrides(manifest, overrides);
        write_manifest(join_path(cfg.output_dir, "manifest.txt"), manifest);
        std::cout << "wrote " << join_path(cfg.output_dir, "summary.csv") << ", acf.csv, ess.csv\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "diagnose: " << e.what() << '\n';
        return 1;
    }
}

} // namespace hhmm
