#include "hhmm/config.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "hhmm/io.hpp"

namespace hhmm {

namespace {

using nlohmann::json;

// Reference emission estimates for the 3-state porpoise dive model.
struct ReferenceTable {
    double dur_mean[3], dur_sd[3];
    double dep_mean[3], dep_sd[3];
    double wig_mean[3], wig_sd[3];
    double zero[3];
};

constexpr ReferenceTable kMle = {
    {5.633, 32.167, 106.817}, {4.368, 15.138, 38.417},
    {3.738, 13.188, 39.613},  {1.425, 5.288, 18.111},
    {1.455, 11.292, 45.822},  {1.203, 7.681, 24.374},
    {0.309, 0.008, 0.0002},
};

constexpr ReferenceTable kBayes = {
    {5.711, 32.321, 106.891}, {4.440, 15.159, 38.391},
    {3.766, 13.241, 39.658},  {1.449, 5.293, 18.135},
    {1.482, 11.362, 45.893},  {1.233, 7.701, 24.402},
    {0.307, 0.008, 0.0006},
};

// Tuned proposal scales for the reference model shape, by covariate and state.
constexpr double kScaleMean[3][3] = {
    {0.218, 0.878, 2.200}, // duration
    {0.110, 0.286, 0.972}, // max_depth
    {0.081, 0.330, 1.210}, // wiggliness
};
constexpr double kScaleSd[3][3] = {
    {0.258, 0.779, 1.949},
    {0.102, 0.278, 0.857},
    {0.073, 0.320, 1.187},
};
constexpr double kScaleZero[3] = {0.052, 0.008, 0.001};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::runtime_error("config: " + where + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a)
                ok = true;
        if (!ok)
            fail(where, "unknown key '" + key + "'");
    }
}

double get_double(const json& j, const char* key, const std::string& where) {
    if (!j.at(key).is_number())
        fail(where, std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

long get_long(const json& j, const char* key, const std::string& where) {
    if (!j.at(key).is_number_integer())
        fail(where, std::string("'") + key + "' must be an integer");
    return j.at(key).get<long>();
}

bool get_bool(const json& j, const char* key, const std::string& where) {
    if (!j.at(key).is_boolean())
        fail(where, std::string("'") + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
    if (!j.at(key).is_string())
        fail(where, std::string("'") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

GammaSpec parse_gamma_spec(const json& j, const std::string& where) {
    if (!j.is_object())
        fail(where, "expected an object with 'mean' and 'sd'");
    check_keys(j, {"mean", "sd"}, where);
    return {get_double(j, "mean", where), get_double(j, "sd", where)};
}

TransitionMatrix parse_tpm(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        fail(where, "expected " + std::to_string(n) + " rows");
    std::vector<double> a;
    a.reserve(static_cast<std::size_t>(n) * n);
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            fail(where, "every row needs " + std::to_string(n) + " entries");
        for (const auto& v : row) {
            if (!v.is_number())
                fail(where, "entries must be numbers");
            a.push_back(v.get<double>());
        }
    }
    try {
        return TransitionMatrix(n, std::move(a));
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
}

StationaryDist parse_dist(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        fail(where, "expected " + std::to_string(n) + " entries");
    std::vector<double> p;
    p.reserve(static_cast<std::size_t>(n));
    for (const auto& v : j) {
        if (!v.is_number())
            fail(where, "entries must be numbers");
        p.push_back(v.get<double>());
    }
    try {
        return StationaryDist(std::move(p));
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
}

HierarchicalModel parse_model(const json& j, int n, int k, const std::string& where) {
    if (!j.is_object())
        fail(where, "expected a model object");
    check_keys(j,
               {"emissions", "production_tpms", "internal_tpm", "production_inits",
                "internal_init"},
               where);
    for (const char* req : {"emissions", "production_tpms", "internal_tpm"})
        if (!j.contains(req))
            fail(where, std::string("missing '") + req + "'");

    HierarchicalModel m;
    const json& em = j.at("emissions");
    if (!em.is_array() || static_cast<int>(em.size()) != n)
        fail(where + ".emissions", "expected " + std::to_string(n) + " states");
    for (int s = 0; s < n; ++s) {
        const json& e = em.at(static_cast<std::size_t>(s));
        const std::string ew = where + ".emissions[" + std::to_string(s) + "]";
        if (!e.is_object())
            fail(ew, "expected an object");
        check_keys(e, {"duration", "max_depth", "wiggliness", "zero_mass"}, ew);
        StateEmission se;
        se.duration = parse_gamma_spec(e.at("duration"), ew + ".duration");
        se.max_depth = parse_gamma_spec(e.at("max_depth"), ew + ".max_depth");
        se.wiggliness = parse_gamma_spec(e.at("wiggliness"), ew + ".wiggliness");
        se.zero_mass = get_double(e, "zero_mass", ew);
        m.emissions.states.push_back(se);
    }

    const json& pt = j.at("production_tpms");
    if (!pt.is_array() || static_cast<int>(pt.size()) != k)
        fail(where + ".production_tpms", "expected " + std::to_string(k) + " matrices");
    for (int i = 0; i < k; ++i)
        m.production_tpms.push_back(parse_tpm(pt.at(static_cast<std::size_t>(i)), n,
                                              where + ".production_tpms["
                                                  + std::to_string(i) + "]"));
    m.internal_tpm = parse_tpm(j.at("internal_tpm"), k, where + ".internal_tpm");

    try {
        if (j.contains("production_inits")) {
            const json& pi = j.at("production_inits");
            if (!pi.is_array() || static_cast<int>(pi.size()) != k)
                fail(where + ".production_inits", "expected " + std::to_string(k) + " vectors");
            for (int i = 0; i < k; ++i)
                m.production_inits.push_back(parse_dist(pi.at(static_cast<std::size_t>(i)), n,
                                                        where + ".production_inits["
                                                            + std::to_string(i) + "]"));
        } else {
            for (int i = 0; i < k; ++i)
                m.production_inits.push_back(stationary(m.production_tpms[static_cast<std::size_t>(i)]));
        }
        m.internal_init = j.contains("internal_init")
                              ? parse_dist(j.at("internal_init"), k, where + ".internal_init")
                              : stationary(m.internal_tpm);
    } catch (const std::domain_error& e) {
        fail(where, std::string("cannot derive initial distribution: ") + e.what());
    }

    try {
        m.validate();
        m.emissions.validate();
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    } catch (const std::domain_error& e) {
        fail(where, e.what());
    }
    return m;
}

} // namespace

EmissionParams reference_emissions(ReferenceEstimate which) {
    const ReferenceTable& t = which == ReferenceEstimate::Mle ? kMle : kBayes;
    EmissionParams out;
    for (int s = 0; s < 3; ++s) {
        StateEmission e;
        e.duration = {t.dur_mean[s], t.dur_sd[s]};
        e.max_depth = {t.dep_mean[s], t.dep_sd[s]};
        e.wiggliness = {t.wig_mean[s], t.wig_sd[s]};
        e.zero_mass = t.zero[s];
        out.states.push_back(e);
    }
    return out;
}

TransitionMatrix default_production_tpm(int n) {
    if (n < 1)
        throw std::invalid_argument("default_production_tpm: bad size");
    if (n == 1)
        return TransitionMatrix(1, {1.0});
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.1 / (n - 1));
    for (int i = 0; i < n; ++i)
        a[static_cast<std::size_t>(i) * n + i] = 0.9;
    return TransitionMatrix(n, std::move(a));
}

TransitionMatrix default_internal_tpm(int k) {
    if (k < 1)
        throw std::invalid_argument("default_internal_tpm: bad size");
    if (k == 1)
        return TransitionMatrix(1, {1.0});
    std::vector<double> a(static_cast<std::size_t>(k) * k, 0.05 / (k - 1));
    for (int i = 0; i < k; ++i)
        a[static_cast<std::size_t>(i) * k + i] = 0.95;
    return TransitionMatrix(k, std::move(a));
}

HierarchicalModel reference_model(ReferenceEstimate which) {
    std::vector<TransitionMatrix> ptpms(2, default_production_tpm(3));
    return make_hierarchical_model(default_internal_tpm(2), std::move(ptpms),
                                   reference_emissions(which));
}

ExperimentConfig load_config(const std::string& path) {
    const std::string raw = read_file(path);
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config: " + path + ": " + e.what());
    }
    if (!j.is_object())
        fail(path, "top level must be an object");
    check_keys(j,
               {"model", "simulation", "priors", "sampler", "tempering", "diagnose", "seed",
                "output_dir", "data"},
               path);

    ExperimentConfig cfg;
    cfg.config_hash = hash_hex(raw);

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, {"n_production", "n_internal", "init_mode"}, "model");
        if (m.contains("n_production"))
            cfg.model.n_production = static_cast<int>(get_long(m, "n_production", "model"));
        if (m.contains("n_internal"))
            cfg.model.n_internal = static_cast<int>(get_long(m, "n_internal", "model"));
        if (m.contains("init_mode")) {
            const std::string v = get_string(m, "init_mode", "model");
            if (v == "derived")
                cfg.model.init_mode = InitMode::Derived;
            else if (v == "free")
                cfg.model.init_mode = InitMode::Free;
            else
                fail("model.init_mode", "expected 'derived' or 'free', got '" + v + "'");
        }
        if (cfg.model.n_production < 1 || cfg.model.n_production > 32
            || cfg.model.n_internal < 1 || cfg.model.n_internal > 32)
            fail("model", "state counts must lie in [1, 32]");
    }
    const int n = cfg.model.n_production;
    const int k = cfg.model.n_internal;

    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        check_keys(s, {"ground_truth", "n_frames", "dives_per_frame", "seed"}, "simulation");
        SimulationConfig sim;
        if (!s.contains("ground_truth"))
            fail("simulation", "missing 'ground_truth'");
        const json& gt = s.at("ground_truth");
        if (gt.is_string()) {
            const std::string v = gt.get<std::string>();
            if (n != 3 || k != 2)
                fail("simulation.ground_truth",
                     "'" + v + "' is only defined for n_production=3, n_internal=2");
            if (v == "reference_mle")
                sim.ground_truth = reference_model(ReferenceEstimate::Mle);
            else if (v == "reference_bayes")
                sim.ground_truth = reference_model(ReferenceEstimate::Bayes);
            else
                fail("simulation.ground_truth",
                     "expected 'reference_mle', 'reference_bayes', or a model object");
        } else {
            sim.ground_truth = parse_model(gt, n, k, "simulation.ground_truth");
        }
        if (s.contains("n_frames"))
            sim.n_frames = static_cast<int>(get_long(s, "n_frames", "simulation"));
        if (s.contains("dives_per_frame")) {
            const json& d = s.at("dives_per_frame");
            if (d.is_number_integer()) {
                sim.dives_per_frame = {d.get<int>()};
            } else if (d.is_array()) {
                sim.dives_per_frame.clear();
                for (const auto& v : d) {
                    if (!v.is_number_integer())
                        fail("simulation.dives_per_frame", "entries must be integers");
                    sim.dives_per_frame.push_back(v.get<int>());
                }
            } else {
                fail("simulation.dives_per_frame", "expected an integer or an array");
            }
        }
        if (s.contains("seed"))
            sim.seed = static_cast<std::uint64_t>(get_long(s, "seed", "simulation"));
        SimConfig check{sim.ground_truth, sim.n_frames, sim.dives_per_frame, sim.seed};
        try {
            check.validate();
        } catch (const std::invalid_argument& e) {
            fail("simulation", e.what());
        }
        cfg.simulation = std::move(sim);
    }

    if (j.contains("priors")) {
        const json& p = j.at("priors");
        check_keys(p,
                   {"mean_location", "mean_scale", "sd_shape", "sd_scale", "zero_mass_a",
                    "zero_mass_b", "tpm_a", "tpm_b"},
                   "priors");
        if (p.contains("mean_location"))
            cfg.priors.mean_location = get_double(p, "mean_location", "priors");
        if (p.contains("mean_scale"))
            cfg.priors.mean_scale = get_double(p, "mean_scale", "priors");
        if (p.contains("sd_shape"))
            cfg.priors.sd_shape = get_double(p, "sd_shape", "priors");
        if (p.contains("sd_scale"))
            cfg.priors.sd_scale = get_double(p, "sd_scale", "priors");
        if (p.contains("zero_mass_a"))
            cfg.priors.zero_mass_a = get_double(p, "zero_mass_a", "priors");
        if (p.contains("zero_mass_b"))
            cfg.priors.zero_mass_b = get_double(p, "zero_mass_b", "priors");
        if (p.contains("tpm_a"))
            cfg.priors.tpm_a = get_double(p, "tpm_a", "priors");
        if (p.contains("tpm_b"))
            cfg.priors.tpm_b = get_double(p, "tpm_b", "priors");
        try {
            cfg.priors.validate();
        } catch (const std::invalid_argument& e) {
            fail("priors", e.what());
        }
    }

    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        check_keys(s,
                   {"mode", "pt_schedule", "iterations", "burn_in", "tune_interval",
                    "tpm_estimation", "initial_values", "initial_scales"},
                   "sampler");
        auto parse_mode = [&](const std::string& v, const char* where) {
            if (v == "single")
                return SamplerMode::Single;
            if (v == "block_by_variable")
                return SamplerMode::BlockByVariable;
            if (v == "block_by_parameter")
                return SamplerMode::BlockByParameter;
            if (v == "pt")
                return SamplerMode::Pt;
            fail(where, "unknown mode '" + v + "'");
        };
        if (s.contains("mode"))
            cfg.sampler.mode = parse_mode(get_string(s, "mode", "sampler"), "sampler.mode");
        if (s.contains("pt_schedule")) {
            const SamplerMode m = parse_mode(get_string(s, "pt_schedule", "sampler"),
                                             "sampler.pt_schedule");
            switch (m) {
            case SamplerMode::Single:
                cfg.sampler.pt_schedule = ScheduleMode::Single;
                break;
            case SamplerMode::BlockByVariable:
                cfg.sampler.pt_schedule = ScheduleMode::BlockByVariable;
                break;
            case SamplerMode::BlockByParameter:
                cfg.sampler.pt_schedule = ScheduleMode::BlockByParameter;
                break;
            case SamplerMode::Pt:
                fail("sampler.pt_schedule", "must be a within-chain schedule, not 'pt'");
            }
        }
        if (s.contains("iterations"))
            cfg.sampler.iterations = get_long(s, "iterations", "sampler");
        if (s.contains("burn_in"))
            cfg.sampler.burn_in = get_long(s, "burn_in", "sampler");
        if (s.contains("tune_interval"))
            cfg.sampler.tune_interval = static_cast<int>(get_long(s, "tune_interval", "sampler"));
        if (s.contains("tpm_estimation"))
            cfg.sampler.tpm_estimation = get_bool(s, "tpm_estimation", "sampler");
        if (s.contains("initial_values")) {
            const json& iv = s.at("initial_values");
            if (iv.is_string()) {
                if (iv.get<std::string>() != "truth_rounded_1dp")
                    fail("sampler.initial_values",
                         "expected 'truth_rounded_1dp' or a model object");
            } else {
                cfg.sampler.initial_model = parse_model(iv, n, k, "sampler.initial_values");
            }
        }
        if (s.contains("initial_scales")) {
            const json& sc = s.at("initial_scales");
            if (sc.is_string()) {
                if (sc.get<std::string>() != "defaults")
                    fail("sampler.initial_scales", "expected 'defaults', a number, or a map");
            } else if (sc.is_number()) {
                cfg.sampler.uniform_scale = sc.get<double>();
                if (!(*cfg.sampler.uniform_scale > 0.0))
                    fail("sampler.initial_scales", "must be positive");
            } else if (sc.is_object()) {
                for (const auto& [key, value] : sc.items()) {
                    if (!value.is_number() || !(value.get<double>() > 0.0))
                        fail("sampler.initial_scales",
                             "'" + key + "' must be a positive number");
                    cfg.sampler.scale_overrides[key] = value.get<double>();
                }
            } else {
                fail("sampler.initial_scales", "expected 'defaults', a number, or a map");
            }
        }
    }

    if (j.contains("tempering")) {
        const json& t = j.at("tempering");
        check_keys(t, {"ladder", "cycle_length", "num_cycles", "parallel"}, "tempering");
        if (t.contains("ladder")) {
            const json& l = t.at("ladder");
            if (l.is_array()) {
                cfg.tempering.ladder.clear();
                for (const auto& v : l) {
                    if (!v.is_number())
                        fail("tempering.ladder", "temperatures must be numbers");
                    cfg.tempering.ladder.push_back(v.get<double>());
                }
            } else if (l.is_object()) {
                check_keys(l, {"n_chains", "beta_min"}, "tempering.ladder");
                const long nc = get_long(l, "n_chains", "tempering.ladder");
                const double bm = get_double(l, "beta_min", "tempering.ladder");
                try {
                    cfg.tempering.ladder = Ladder::evenly_spaced(static_cast<int>(nc), bm).betas();
                } catch (const std::invalid_argument& e) {
                    fail("tempering.ladder", e.what());
                }
            } else {
                fail("tempering.ladder", "expected an array or {n_chains, beta_min}");
            }
        }
        try {
            Ladder check(cfg.tempering.ladder);
        } catch (const std::invalid_argument& e) {
            fail("tempering.ladder", e.what());
        }
        if (t.contains("cycle_length"))
            cfg.tempering.cycle_length = get_long(t, "cycle_length", "tempering");
        if (t.contains("num_cycles"))
            cfg.tempering.num_cycles = get_long(t, "num_cycles", "tempering");
        if (t.contains("parallel"))
            cfg.tempering.parallel = get_bool(t, "parallel", "tempering");
        SwapSchedule sched{cfg.tempering.cycle_length, cfg.tempering.num_cycles};
        try {
            sched.validate();
        } catch (const std::invalid_argument& e) {
            fail("tempering", e.what());
        }
    }

    if (j.contains("diagnose")) {
        const json& d = j.at("diagnose");
        check_keys(d, {"max_lag", "burn_in"}, "diagnose");
        if (d.contains("max_lag"))
            cfg.diagnose.max_lag = static_cast<int>(get_long(d, "max_lag", "diagnose"));
        if (cfg.diagnose.max_lag < 1)
            fail("diagnose.max_lag", "must be >= 1");
        if (d.contains("burn_in")) {
            cfg.diagnose.burn_in = get_long(d, "burn_in", "diagnose");
            if (*cfg.diagnose.burn_in < 0)
                fail("diagnose.burn_in", "must be >= 0");
        }
    }

    if (j.contains("seed"))
        cfg.seed = static_cast<std::uint64_t>(get_long(j, "seed", path));
    if (j.contains("output_dir"))
        cfg.output_dir = get_string(j, "output_dir", path);
    if (j.contains("data"))
        cfg.data_path = get_string(j, "data", path);
    return cfg;
}

std::vector<double> initial_theta(const ParameterSchema& schema, const HierarchicalModel& truth,
                                  const std::optional<HierarchicalModel>& explicit_model) {
    if (explicit_model)
        return pack_parameters(schema, *explicit_model);
    std::vector<double> theta = pack_parameters(schema, truth);
    for (int i = 0; i < schema.dim(); ++i) {
        const ParamRole role = schema.info(i).role;
        if (role == ParamRole::Mean || role == ParamRole::Sd || role == ParamRole::ZeroMass)
            theta[static_cast<std::size_t>(i)] =
                std::round(theta[static_cast<std::size_t>(i)] * 10.0) / 10.0;
    }
    return theta;
}

std::vector<double> default_scales(const ParameterSchema& schema,
                                   std::span<const double> theta0) {
    if (static_cast<int>(theta0.size()) != schema.dim())
        throw std::invalid_argument("default_scales: theta dimension mismatch");
    std::vector<double> scales(theta0.size());
    const bool tuned_shape = schema.n_production() == 3;
    for (int i = 0; i < schema.dim(); ++i) {
        const ParamInfo& p = schema.info(i);
        double s = 0.1 * std::abs(theta0[static_cast<std::size_t>(i)]) + 0.01;
        if (tuned_shape) {
            if (p.role == ParamRole::Mean)
                s = kScaleMean[p.covariate][p.state];
            else if (p.role == ParamRole::Sd)
                s = kScaleSd[p.covariate][p.state];
            else if (p.role == ParamRole::ZeroMass)
                s = kScaleZero[p.state];
        }
        scales[static_cast<std::size_t>(i)] = s;
    }
    return scales;
}

} // namespace hhmm
