#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "hhmm/io.hpp"
#include "hhmm/rng.hpp"
#include "helpers.hpp"

using namespace hhmm;

namespace {

std::string test_dir() {
    auto dir = std::filesystem::temp_directory_path() / "hhmm_io_tests";
    std::filesystem::create_directories(dir);
    return dir.string();
}

} // namespace

TEST_CASE("doubles round-trip through text exactly") {
    RngStream rng(701, 0);
    for (int i = 0; i < 2000; ++i) {
        double v = std::exp(40.0 * (rng.uniform() - 0.5)) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        CHECK(parse_double(format_double(v), "t") == v);
    }
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(parse_double("0.10000000000000001", "t") == 0.1);
    CHECK(format_double(1.0) == "1");
    CHECK_THROWS_WITH_AS(parse_double("abc", "ctx"), doctest::Contains("ctx"),
                         std::runtime_error);
    CHECK_THROWS_AS(parse_double("1.5x", "ctx"), std::runtime_error);
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hash_hex("") == "cbf29ce484222325");
    CHECK(hash_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("file helpers create directories and report missing files") {
    auto path = test_dir() + "/nested/deeper/file.txt";
    std::filesystem::remove_all(test_dir() + "/nested");
    write_file(path, "payload");
    CHECK(read_file(path) == "payload");
    CHECK_THROWS_WITH_AS(read_file(test_dir() + "/absent.txt"), doctest::Contains("absent.txt"),
                         std::runtime_error);
}

TEST_CASE("data csv round trip") {
    RngStream rng(702, 0);
    auto data = test::random_dataset(rng, 7, 6);
    auto path = test_dir() + "/data_rt.csv";
    write_data_csv(path, data);
    auto back = read_data_csv(path);
    REQUIRE(back.n_frames() == data.n_frames());
    for (int m = 0; m < data.n_frames(); ++m) {
        const auto& fa = data.frames[static_cast<std::size_t>(m)];
        const auto& fb = back.frames[static_cast<std::size_t>(m)];
        REQUIRE(fa.dives.size() == fb.dives.size());
        for (std::size_t t = 0; t < fa.dives.size(); ++t) {
            CHECK(fa.dives[t].duration == fb.dives[t].duration);
            CHECK(fa.dives[t].max_depth == fb.dives[t].max_depth);
            CHECK(fa.dives[t].wiggliness == fb.dives[t].wiggliness);
        }
    }
}

TEST_CASE("data csv reader reports malformed input") {
    auto path = test_dir() + "/bad_data.csv";

    write_file(path, "duration,max_depth\n");
    CHECK_THROWS_WITH_AS(read_data_csv(path), doctest::Contains("header"), std::runtime_error);

    write_file(path, "frame_index,dive_index,duration,max_depth,wiggliness\n1,1,5.0,3.0\n");
    CHECK_THROWS_WITH_AS(read_data_csv(path), doctest::Contains("line 2"), std::runtime_error);

    write_file(path,
               "frame_index,dive_index,duration,max_depth,wiggliness\n"
               "1,1,5.0,3.0,0.5\n1,3,5.0,3.0,0.5\n");
    CHECK_THROWS_WITH_AS(read_data_csv(path), doctest::Contains("out of order"),
                         std::runtime_error);

    write_file(path, "frame_index,dive_index,duration,max_depth,wiggliness\n1,1,5.0,oops,0.5\n");
    CHECK_THROWS_WITH_AS(read_data_csv(path), doctest::Contains("expected a number"),
                         std::runtime_error);

    write_file(path, "frame_index,dive_index,duration,max_depth,wiggliness\n1,1,5.0,-3.0,0.5\n");
    CHECK_THROWS_AS(read_data_csv(path), std::runtime_error);
}

TEST_CASE("trace csv round trip preserves metadata and values") {
    Trace t;
    t.names = {"alpha", "beta_2"};
    t.columns = {{0.25, -1.5, 3.0}, {1e-12, 2.5, 1.0 / 3.0}};
    t.energy = {10.5, 11.25, 9.875};
    t.burn_in = 1;
    t.metadata = {{"mode", "single"}, {"seed", "42"}, {"ladder", "1 0.75 0.5"}};

    auto path = test_dir() + "/trace_rt.csv";
    write_trace_csv(path, t);
    auto back = read_trace_csv(path);
    CHECK(back.names == t.names);
    CHECK(back.burn_in == 1);
    CHECK(back.columns == t.columns);
    CHECK(back.energy == t.energy);
    // schema and burn_in round-trip into metadata alongside the free-form keys
    bool found = false;
    for (const auto& [k, v] : back.metadata)
        if (k == "ladder" && v == "1 0.75 0.5")
            found = true;
    CHECK(found);

    // rewriting the parsed trace reproduces the file byte for byte
    auto path2 = test_dir() + "/trace_rt2.csv";
    back.metadata = t.metadata;
    write_trace_csv(path2, back);
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("trace csv reader rejects broken files") {
    auto path = test_dir() + "/bad_trace.csv";
    write_file(path, "sweep,a,energy\n1,0.5,2.0\n");
    CHECK_THROWS_WITH_AS(read_trace_csv(path), doctest::Contains("schema"), std::runtime_error);

    write_file(path, "# schema=trace/v1\n# burn_in=0\nsweep,a,energy\n1,0.5\n");
    CHECK_THROWS_WITH_AS(read_trace_csv(path), doctest::Contains("line 4"), std::runtime_error);

    write_file(path, "# schema=trace/v1\n# burn_in=0\nsweep,a,energy\n");
    CHECK_THROWS_WITH_AS(read_trace_csv(path), doctest::Contains("no sweeps"),
                         std::runtime_error);
}

TEST_CASE("summary csv layout") {
    PosteriorSummary s;
    s.rows.push_back({"p1", 1.5, 0.25, 1.0, 1.5, 2.0});
    s.rows.push_back({"energy", 100.0, 5.0, 90.0, 100.0, 110.0});

    auto path = test_dir() + "/summary.csv";
    write_summary_csv(path, s, nullptr);
    CHECK(read_file(path)
          == "parameter,mean,sd,p2,p50,p98\n"
             "p1,1.5,0.25,1,1.5,2\n"
             "energy,100,5,90,100,110\n");

    std::vector<double> fractions{0.375, std::numeric_limits<double>::quiet_NaN()};
    write_summary_csv(path, s, &fractions);
    CHECK(read_file(path)
          == "parameter,mean,sd,p2,p50,p98,acceptance_fraction\n"
             "p1,1.5,0.25,1,1.5,2,0.375\n"
             "energy,100,5,90,100,110,\n");

    std::vector<double> wrong{0.1};
    CHECK_THROWS_AS(write_summary_csv(path, s, &wrong), std::invalid_argument);
}

TEST_CASE("swap csv layout") {
    std::vector<SwapRecord> swaps;
    swaps.push_back({3, 0, 1, -2.5, -0.25, 1.0, true});
    swaps.push_back({3, 1, 2, 4.0, -0.25, 0.36787944117144233, false});

    auto path = test_dir() + "/swaps.csv";
    write_swaps_csv(path, swaps);
    CHECK(read_file(path)
          == "cycle,lower,upper,delta_energy,delta_beta,probability,accepted\n"
             "3,0,1,-2.5,-0.25,1,1\n"
             "3,1,2,4,-0.25,0.36787944117144233,0\n");
}

TEST_CASE("acf and ess csv layout") {
    std::vector<AcfRow> rows{{"p1", 1, 0.5}, {"p1", 2, 0.25}};
    auto path = test_dir() + "/acf.csv";
    write_acf_csv(path, rows);
    CHECK(read_file(path) == "parameter,lag,acf\np1,1,0.5\np1,2,0.25\n");

    std::vector<EssRow> erows{{"p1", 123.5}, {"energy", 88.0}};
    auto epath = test_dir() + "/ess.csv";
    write_ess_csv(epath, erows);
    CHECK(read_file(epath) == "parameter,ess\np1,123.5\nenergy,88\n");
}

TEST_CASE("manifest preserves entry order") {
    auto path = test_dir() + "/manifest.txt";
    write_manifest(path, {{"schema", "manifest/v1"}, {"command", "fit"}, {"seed", "7"}});
    CHECK(read_file(path) == "schema=manifest/v1\ncommand=fit\nseed=7\n");
}
