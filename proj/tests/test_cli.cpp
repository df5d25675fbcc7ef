#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <doctest.h>

#include "hhmm/commands.hpp"
#include "hhmm/io.hpp"
#include "helpers.hpp"

using namespace hhmm;

namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "hhmm_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HHMM_CLI_PATH) + " " + args;
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

const char* kSmallExperiment = R"({
    "simulation": {"ground_truth": "reference_mle", "n_frames": 4,
                    "dives_per_frame": 5, "seed": 3},
    "sampler": {"iterations": 120, "burn_in": 40},
    "seed": 9
})";

} // namespace

TEST_CASE("simulate, fit, diagnose round trip through the binary") {
    auto dir = fresh_dir("pipeline");
    auto cfg_path = dir + "/exp.json";
    write_file(cfg_path, kSmallExperiment);

    CHECK(run_cli("simulate " + cfg_path + " --out " + dir + " >/dev/null 2>&1") == 0);
    REQUIRE(fs::exists(dir + "/data.csv"));
    REQUIRE(fs::exists(dir + "/truth.csv"));
    auto data = read_data_csv(dir + "/data.csv");
    CHECK(data.n_frames() == 4);
    CHECK(data.total_dives() == 20);

    // truth rows pair with data rows, states stay in range
    auto truth = read_file(dir + "/truth.csv");
    CHECK(truth.starts_with("frame_index,dive_index,internal_state,production_state\n"));
    CHECK(std::count(truth.begin(), truth.end(), '\n') == 21);

    auto manifest = read_file(dir + "/manifest.txt");
    CHECK(manifest.find("command=simulate\n") != std::string::npos);
    CHECK(manifest.find("n_dives=20\n") != std::string::npos);

    CHECK(run_cli("fit " + cfg_path + " --data " + dir + "/data.csv --out " + dir
                  + " >/dev/null 2>&1")
          == 0);
    auto trace = read_trace_csv(dir + "/trace.csv");
    CHECK(trace.n_sweeps() == 120);
    CHECK(trace.burn_in == 40);
    CHECK(trace.names.size() == 21);
    bool saw_mode = false, saw_data_hash = false;
    for (const auto& [k, v] : trace.metadata) {
        saw_mode = saw_mode || (k == "mode" && v == "single");
        saw_data_hash = saw_data_hash || (k == "data_hash" && v.size() == 16);
    }
    CHECK(saw_mode);
    CHECK(saw_data_hash);

    auto summary = read_file(dir + "/summary.csv");
    CHECK(summary.starts_with("parameter,mean,sd,p2,p50,p98,acceptance_fraction\n"));
    CHECK(summary.find("\nenergy,") != std::string::npos);
    // the energy row has no acceptance fraction
    auto energy_pos = summary.find("\nenergy,");
    auto line_end = summary.find('\n', energy_pos + 1);
    CHECK(summary[line_end - 1] == ',');

    CHECK(run_cli("diagnose " + cfg_path + " --data " + dir + "/trace.csv --out " + dir
                  + " >/dev/null 2>&1")
          == 0);
    CHECK(fs::exists(dir + "/acf.csv"));
    CHECK(fs::exists(dir + "/ess.csv"));
    auto ess_out = read_file(dir + "/ess.csv");
    CHECK(ess_out.starts_with("parameter,ess\n"));
}

TEST_CASE("simulate output is deterministic and seed overrides change it") {
    auto dir_a = fresh_dir("det_a");
    auto dir_b = fresh_dir("det_b");
    auto cfg_a = dir_a + "/exp.json";
    auto cfg_b = dir_b + "/exp.json";
    write_file(cfg_a, kSmallExperiment);
    write_file(cfg_b, kSmallExperiment);

    CHECK(run_cli("simulate " + cfg_a + " --out " + dir_a + " >/dev/null 2>&1") == 0);
    CHECK(run_cli("simulate " + cfg_b + " --out " + dir_b + " >/dev/null 2>&1") == 0);
    CHECK(read_file(dir_a + "/data.csv") == read_file(dir_b + "/data.csv"));
    CHECK(read_file(dir_a + "/truth.csv") == read_file(dir_b + "/truth.csv"));

    auto dir_c = fresh_dir("det_c");
    auto cfg_c = dir_c + "/exp.json";
    write_file(cfg_c, kSmallExperiment);
    CHECK(run_cli("simulate " + cfg_c + " --out " + dir_c + " --seed 77 >/dev/null 2>&1") == 0);
    CHECK(read_file(dir_a + "/data.csv") != read_file(dir_c + "/data.csv"));
    CHECK(read_file(dir_c + "/manifest.txt").find("override_seed=77\n") != std::string::npos);
}

TEST_CASE("parallel tempering fit writes every chain and the swap log") {
    auto dir = fresh_dir("pt");
    auto cfg_path = dir + "/exp.json";
    write_file(cfg_path, R"({
        "simulation": {"ground_truth": "reference_mle", "n_frames": 3,
                        "dives_per_frame": 4, "seed": 5},
        "sampler": {"mode": "pt", "iterations": 999, "burn_in": 20},
        "tempering": {"ladder": [1.0, 0.5], "cycle_length": 10, "num_cycles": 6,
                       "parallel": false},
        "seed": 12
    })");

    CHECK(run_cli("simulate " + cfg_path + " --out " + dir + " >/dev/null 2>&1") == 0);
    CHECK(run_cli("fit " + cfg_path + " --data " + dir + "/data.csv --out " + dir
                  + " >/dev/null 2>&1")
          == 0);

    auto cold = read_trace_csv(dir + "/trace.csv");
    auto hot = read_trace_csv(dir + "/trace_chain1.csv");
    CHECK(cold.n_sweeps() == 60);
    CHECK(hot.n_sweeps() == 60);
    bool cold_beta = false, hot_beta = false, ladder_meta = false;
    for (const auto& [k, v] : cold.metadata) {
        cold_beta = cold_beta || (k == "beta" && v == "1");
        ladder_meta = ladder_meta || (k == "ladder" && v == "1 0.5");
    }
    for (const auto& [k, v] : hot.metadata)
        hot_beta = hot_beta || (k == "beta" && v == "0.5");
    CHECK(cold_beta);
    CHECK(hot_beta);
    CHECK(ladder_meta);

    auto swaps = read_file(dir + "/swaps.csv");
    CHECK(swaps.starts_with("cycle,lower,upper,delta_energy,delta_beta,probability,accepted\n"));
    CHECK(std::count(swaps.begin(), swaps.end(), '\n') == 7);

    auto manifest = read_file(dir + "/manifest.txt");
    CHECK(manifest.find("mode=pt\n") != std::string::npos);
    CHECK(manifest.find("swap_attempts=6\n") != std::string::npos);
}

TEST_CASE("cli errors exit nonzero with a message") {
    auto dir = fresh_dir("errors");
    auto cfg_path = dir + "/exp.json";
    write_file(cfg_path, kSmallExperiment);

    CHECK(run_cli("fit " + cfg_path + " --out " + dir + " 2> " + dir + "/err.txt") == 1);
    CHECK(read_file(dir + "/err.txt").find("needs a data file") != std::string::npos);

    CHECK(run_cli("simulate " + cfg_path + " --data x.csv --out " + dir + " 2> " + dir
                  + "/err2.txt")
          == 1);
    CHECK(read_file(dir + "/err2.txt").find("--data") != std::string::npos);

    CHECK(run_cli("diagnose " + cfg_path + " --data " + dir + "/missing.csv --out " + dir
                  + " 2> " + dir + "/err3.txt")
          == 1);

    write_file(dir + "/broken.json", "{");
    CHECK(run_cli("simulate " + dir + "/broken.json --out " + dir + " >/dev/null 2>&1") == 1);

    CHECK(run_cli(">/dev/null 2>&1") != 0); // missing subcommand

    auto no_sim = dir + "/nosim.json";
    write_file(no_sim, R"({"sampler": {"iterations": 10}})");
    CHECK(run_cli("simulate " + no_sim + " --out " + dir + " 2> " + dir + "/err4.txt") == 1);
    CHECK(read_file(dir + "/err4.txt").find("simulation") != std::string::npos);
}

TEST_CASE("diagnose skips constant columns with a warning") {
    auto dir = fresh_dir("diag_const");
    Trace t;
    t.names = {"moving", "stuck"};
    t.columns = {{1.0, 2.0, 1.5, 2.5, 1.8}, {4.0, 4.0, 4.0, 4.0, 4.0}};
    t.energy = {9.0, 8.0, 7.5, 8.2, 7.9};
    t.burn_in = 1;
    write_trace_csv(dir + "/trace.csv", t);

    auto cfg_path = dir + "/diag.json";
    write_file(cfg_path, R"({"diagnose": {"max_lag": 2}})");
    CHECK(run_cli("diagnose " + cfg_path + " --data " + dir + "/trace.csv --out " + dir + " 2> "
                  + dir + "/warn.txt")
          == 0);
    CHECK(read_file(dir + "/warn.txt").find("'stuck' is constant") != std::string::npos);

    auto ess_out = read_file(dir + "/ess.csv");
    CHECK(ess_out.find("moving,") != std::string::npos);
    CHECK(ess_out.find("stuck,") == std::string::npos);
    CHECK(ess_out.find("energy,") != std::string::npos);

    // burn-in override propagates into the summary
    write_file(cfg_path, R"({"diagnose": {"max_lag": 2, "burn_in": 4}})");
    CHECK(run_cli("diagnose " + cfg_path + " --data " + dir + "/trace.csv --out " + dir
                  + " >/dev/null 2>&1")
          == 0);
    auto manifest = read_file(dir + "/manifest.txt");
    CHECK(manifest.find("burn_in=4\n") != std::string::npos);

    write_file(cfg_path, R"({"diagnose": {"burn_in": 5}})");
    CHECK(run_cli("diagnose " + cfg_path + " --data " + dir + "/trace.csv --out " + dir
                  + " >/dev/null 2>&1")
          == 1);
}

TEST_CASE("fit setup assembles schema, scales, and layout from the config") {
    auto dir = fresh_dir("setup");
    auto cfg_path = dir + "/exp.json";
    write_file(cfg_path, R"({
        "simulation": {"ground_truth": "reference_mle", "n_frames": 3, "dives_per_frame": 4},
        "sampler": {"mode": "block_by_variable", "tpm_estimation": true,
                     "initial_scales": {"duration_mean_1": 0.123}}
    })");
    auto cfg = load_config(cfg_path);
    RngStream rng(900, 0);
    auto data = test::random_dataset(rng, 3, 4);

    auto setup = make_fit_setup(cfg, data);
    CHECK(setup.schema.dim() == 35);
    CHECK(setup.layout.blocks[0].name == "duration_means");
    CHECK(setup.scales0[0] == 0.123);
    CHECK(setup.scales0[1] == 0.878);
    CHECK(setup.theta0[0] == 5.6);
    CHECK(setup.control.iterations == 16000);

    auto target = make_posterior_target(setup);
    CHECK(target->dim() == 35);

    cfg.sampler.scale_overrides["not_a_parameter"] = 1.0;
    CHECK_THROWS_WITH_AS(make_fit_setup(cfg, data), doctest::Contains("not_a_parameter"),
                         std::runtime_error);

    cfg.sampler.scale_overrides.clear();
    cfg.simulation.reset();
    CHECK_THROWS_WITH_AS(make_fit_setup(cfg, data), doctest::Contains("simulation"),
                         std::runtime_error);
}
