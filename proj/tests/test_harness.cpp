#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kspde/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace kspde;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Small coupled-contraction run used by the determinism cases.
ExperimentConfig small_contraction() {
    ExperimentConfig config = default_config("contraction-coupled");
    config.members = 4;
    config.dt = 1e-3;
    config.t_end = 0.1;
    return config;
}

struct ThreadsGuard {
    std::string saved;
    bool had = false;
    ThreadsGuard() {
        if (const char* env = std::getenv("KSPDE_THREADS")) {
            saved = env;
            had = true;
        }
    }
    ~ThreadsGuard() {
        if (had)
            setenv("KSPDE_THREADS", saved.c_str(), 1);
        else
            unsetenv("KSPDE_THREADS");
    }
};

}  // namespace

TEST_CASE("experiment registry") {
    const auto experiments = list_experiments();
    CHECK(experiments.size() >= 8);
    bool has_contraction = false;
    bool has_decay = false;
    for (const auto& [name, doc] : experiments) {
        if (name.find("contraction") != std::string::npos) has_contraction = true;
        if (name.find("measure-decay") != std::string::npos) has_decay = true;
        CHECK(!doc.empty());
        // every registered name must hand out a valid canned config
        CHECK_NOTHROW(default_config(name).validate());
    }
    CHECK(has_contraction);
    CHECK(has_decay);
    CHECK_THROWS_AS(default_config("no-such-thing"), ConfigError);
}

TEST_CASE("config validation") {
    ExperimentConfig config = default_config("heat-exact");
    CHECK_NOTHROW(config.validate());

    ExperimentConfig bad = config;
    bad.experiment = "bogus";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.members = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.points = 96;  // not a power of two
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.points = 4;  // too small
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.dim = 3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.noise = "pink";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.noise = "default";
    bad.noise_alpha.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.flux_exponent = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = config;
    bad.diffusion_exponent = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config json round trip") {
    ExperimentConfig config = default_config("contraction-coupled");
    config.out_dir = "/tmp/somewhere";
    config.truncation = 0.5;

    const std::string text = config_to_json(config);
    const ExperimentConfig back = config_from_json(text);
    CHECK(back == config);
    CHECK(config_hash(back) == config_hash(config));

    // optionals survive as null / int
    ExperimentConfig heat = default_config("heat-exact");
    CHECK(!heat.flux_exponent.has_value());
    const ExperimentConfig heat_back = config_from_json(config_to_json(heat));
    CHECK(heat_back == heat);
    CHECK(!heat_back.flux_exponent.has_value());

    // any field change moves the hash
    ExperimentConfig tweaked = config;
    tweaked.seed_base += 1;
    CHECK(config_hash(tweaked) != config_hash(config));
    tweaked = config;
    tweaked.noise_alpha.push_back(0.125);
    CHECK(config_hash(tweaked) != config_hash(config));

    // defaults fill in missing keys; junk is rejected loudly
    const ExperimentConfig empty = config_from_json("{}");
    CHECK(empty == ExperimentConfig{});
    CHECK_THROWS_AS(config_from_json("{\"volume\": 11}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{\"members\": \"many\"}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(config_from_json("[1, 2]"), ConfigError);
}

TEST_CASE("worker count respects the env override") {
    ThreadsGuard guard;
    setenv("KSPDE_THREADS", "3", 1);
    CHECK(worker_count(100) == 3);
    CHECK(worker_count(2) == 2);  // clamped to the member count
    CHECK(worker_count(1) == 1);
    setenv("KSPDE_THREADS", "0", 1);  // ignored, falls back to hardware
    CHECK(worker_count(1) == 1);
    CHECK(worker_count(1000) >= 1);
}

TEST_CASE("heat exact run") {
    ExperimentConfig config = default_config("heat-exact");
    config.seed_base = 17;
    RunRecord record = run_experiment(config);
    CHECK(record.all_passed());
    REQUIRE(record.verdicts.size() == 1);
    CHECK(record.verdicts[0].name == "heat-l2-error");
    CHECK(record.verdicts[0].measured < record.verdicts[0].bound);
    REQUIRE(record.member_seeds.size() == 1);
    CHECK(record.member_seeds[0] == 17);
    CHECK(record.hash == config_hash(config));
    CHECK(record.wall_seconds >= 0.0);
    CHECK(record.artifacts.empty());  // no out_dir requested
}

TEST_CASE("rerun determinism and artifacts") {
    namespace fs = std::filesystem;
    ExperimentConfig config = small_contraction();
    const std::string dir_a = "/tmp/kspde_harness_a";
    const std::string dir_b = "/tmp/kspde_harness_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    config.out_dir = dir_a;
    RunRecord first = run_experiment(config);
    config.out_dir = dir_b;
    RunRecord second = run_experiment(config);

    REQUIRE(first.verdicts.size() == second.verdicts.size());
    for (std::size_t i = 0; i < first.verdicts.size(); ++i) {
        CHECK(first.verdicts[i].name == second.verdicts[i].name);
        CHECK(first.verdicts[i].pass == second.verdicts[i].pass);
        CHECK(first.verdicts[i].measured == second.verdicts[i].measured);
        CHECK(first.verdicts[i].bound == second.verdicts[i].bound);
    }
    CHECK(slurp(dir_a + "/gap_mean.csv") == slurp(dir_b + "/gap_mean.csv"));
    CHECK(slurp(dir_a + "/verdicts.csv") == slurp(dir_b + "/verdicts.csv"));

    const std::string verdicts = slurp(dir_a + "/verdicts.csv");
    CHECK(verdicts.rfind("name,pass,measured,bound,stderr\n", 0) == 0);
    CHECK(verdicts.find("contraction-gap") != std::string::npos);
    CHECK(fs::exists(dir_a + "/record.json"));

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("thread count does not change results") {
    namespace fs = std::filesystem;
    ThreadsGuard guard;
    ExperimentConfig config = small_contraction();
    const std::string dir_a = "/tmp/kspde_threads_1";
    const std::string dir_b = "/tmp/kspde_threads_8";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    setenv("KSPDE_THREADS", "1", 1);
    config.out_dir = dir_a;
    RunRecord serial = run_experiment(config);
    setenv("KSPDE_THREADS", "8", 1);
    config.out_dir = dir_b;
    RunRecord parallel = run_experiment(config);

    REQUIRE(serial.verdicts.size() == parallel.verdicts.size());
    for (std::size_t i = 0; i < serial.verdicts.size(); ++i)
        CHECK(serial.verdicts[i].measured == parallel.verdicts[i].measured);
    CHECK(slurp(dir_a + "/gap_mean.csv") == slurp(dir_b + "/gap_mean.csv"));

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("member failures name the seed") {
    // coarsest rung runs at 4 dt = 0.05, past the diffusion stability limit
    ExperimentConfig config = small_contraction();
    config.dt = 0.0125;
    config.t_end = 0.5;
    bool threw = false;
    try {
        run_experiment(config);
    } catch (const std::exception& e) {
        threw = true;
        CHECK(std::string(e.what()).find("member seed ") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("deterministic contraction never grows the gap") {
    ExperimentConfig config = default_config("contraction-coupled");
    config.noise = "none";
    config.noise_alpha.clear();
    config.members = 8;
    config.dt = 1e-3;
    config.t_end = 0.1;
    RunRecord record = run_experiment(config);
    CHECK(record.all_passed());
    REQUIRE(record.verdicts.size() == 2);
    CHECK(record.verdicts[0].name == "contraction-gap");
    // without noise the scheme is exactly L1 contractive
    CHECK(record.verdicts[0].measured <= 1e-12);
}

TEST_CASE("regularity fit wiring") {
    ExperimentConfig config = default_config("regularity-burgers");
    config.members = 2;
    config.points = 64;
    config.dt = 2e-4;
    RunRecord record = run_experiment(config);
    REQUIRE(record.verdicts.size() == 1);
    CHECK(record.verdicts[0].name == "regularity-burgers");
    CHECK(std::abs(record.verdicts[0].bound - 0.9 / 18.0) < 1e-15);
    CHECK(record.verdicts[0].measured > 0.0);
}
