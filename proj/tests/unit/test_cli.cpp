#include "temp_dir.hpp"

#include "ubrl/cli.hpp"
#include "ubrl/coverage.hpp"
#include "ubrl/coverage_store.hpp"
#include "ubrl/environments.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using testing_support::TempDir;

namespace {

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

Invocation run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ubrl");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = ubrl::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("solve writes one entry per grid point") {
    TempDir dir("cli");
    const auto out = dir.path() / "coverage.json";
    const auto r = run_cli({"solve", "--env", "gold-nuggets", "--utility", "discount", "--grid", "0:1:5", "--criterion",
                            "per-gamma", "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto set = ubrl::coverage_from_json(read_json(out));
    CHECK(set.entries.size() == 5);
    CHECK(set.criterion == ubrl::Criterion::PerGamma);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"train", "--env", "harvest-world", "--utility", "satisficing", "--grid", "0:5:6"}).code == 2);
    CHECK(run_cli({"solve", "--env", "gold-nuggets"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("domain errors exit with 1") {
    const auto bad_alpha = run_cli({"solve", "--env", "risky-path", "--utility", "cvar", "--grid", "0:1:3", "--criterion", "cvar"});
    CHECK(bad_alpha.code == 1);
    CHECK_FALSE(bad_alpha.err.empty());
    CHECK(run_cli({"env", "make", "lava-lake"}).code == 1);
    CHECK(run_cli({"solve", "--env", "harvest-world", "--utility", "cvar", "--grid", "0.5:1:2", "--criterion", "esr"}).code == 1);
}

TEST_CASE("env make prints the MDP") {
    const auto r = run_cli({"env", "make", "risky-path", "--param", "hazard_prob=0.5"});
    REQUIRE(r.code == 0);
    ubrl::RiskyPathParams p;
    p.hazard_prob = 0.5;
    CHECK(ubrl::mdp_from_json(nlohmann::json::parse(r.out)) == ubrl::make_risky_path(p));
    const auto list = run_cli({"env", "list"});
    CHECK(list.code == 0);
    for (const auto& name : ubrl::environment_names())
        CHECK(list.out.find(name) != std::string::npos);
}

TEST_CASE("solve and train into a store, then show") {
    TempDir dir("cli");
    const auto store = dir.path().string();
    const auto solved = run_cli({"solve", "--env", "mining-world", "--utility", "mining", "--grid", "0:20:5", "--criterion",
                                 "esr", "--store", store});
    REQUIRE(solved.code == 0);
    const std::string id = solved.out.substr(0, solved.out.find('\n'));
    CHECK(ubrl::is_valid_coverage_id(id));
    CHECK(ubrl::CoverageStore(store).load(id).entries.size() == 5);

    const auto shown = run_cli({"show", id, "--store", store});
    CHECK(shown.code == 0);
    CHECK(shown.out.find("switches at:") != std::string::npos);

    const auto log = dir.path() / "log.csv";
    const auto trained = run_cli({"train", "--env", "harvest-world", "--utility", "satisficing", "--grid", "0:5:6", "--seed", "3",
                                  "--episodes", "300", "--log", log.string(), "--store", store});
    REQUIRE(trained.code == 0);
    std::ifstream in(log);
    std::string header;
    std::getline(in, header);
    CHECK(header == "episode,grid_index,return,utility");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);)
        ++lines;
    CHECK(lines == 300);

    const auto swept = run_cli({"sweep", "--env", "risky-path", "--grid", "0.1:1:4", "--store", store});
    CHECK(swept.code == 0);
    CHECK(ubrl::CoverageStore(store).list().size() == 3);
}

TEST_CASE("train reads a config file") {
    TempDir dir("cli");
    const auto cfg = dir.path() / "train.json";
    std::ofstream(cfg) << R"({"episodes": 20000, "step_size": "1", "epsilon": "0.5", "seed": 5,
                              "grid": {"family": "satisficing", "points": ["2", "4"]}})";
    const auto out = dir.path() / "coverage.json";
    const auto r = run_cli({"train", "--env", "harvest-world", "--config", cfg.string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto set = ubrl::coverage_from_json(read_json(out));
    REQUIRE(set.entries.size() == 2);
    CHECK(set.entries[0].record.value == 0.0);
    CHECK(set.entries[1].record.value == 0.0);
    CHECK(run_cli({"train", "--env", "harvest-world", "--config", (dir.path() / "missing.json").string()}).code == 1);
}
